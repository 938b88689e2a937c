#include "capsim/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace capsim {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path)
    : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + tmp_);
  open_ = true;
}

CsvWriter::~CsvWriter() {
  if (open_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);  // abandoned writer leaves no target
  }
}

void CsvWriter::comment(const std::string& text) { line("# " + text); }

void CsvWriter::line(const std::string& raw) {
  if (!open_) throw std::runtime_error("csv writer already closed: " + path_);
  out_ << raw << '\n';
}

void CsvWriter::close() {
  if (!open_) return;
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + tmp_);
  out_.close();
  std::filesystem::rename(tmp_, path_);
  open_ = false;
}

namespace {

std::string model_comment(const OffspringModel& model,
                          const RateConfig& cfg) {
  std::ostringstream s;
  s << "family=" << family_name(model.family()) << " rho="
    << format_double(model.rho()) << " c=" << format_double(cfg.c)
    << " master_seed=" << cfg.master_seed
    << " replicates_per_k=" << cfg.replicates << " w_extra=" << cfg.w_extra;
  return s.str();
}

std::string slope_comment(const char* name, const SlopeFit& fit) {
  std::ostringstream s;
  s << name << ": slope=" << format_double(fit.slope)
    << " se=" << format_double(fit.se) << " valid=" << (fit.valid ? 1 : 0);
  return s.str();
}

}  // namespace

void write_error_samples_csv(const std::string& path,
                             const OffspringModel& model,
                             const RateReport& report) {
  CsvWriter w(path);
  w.comment("error samples at the capacity horizon");
  w.comment(model_comment(model, report.config));
  w.line("k,replicate,w_hat,error_new,error_legacy,extinct_z,extinct_y");
  for (const auto& s : report.samples) {
    std::ostringstream row;
    row << format_double(s.k) << ',' << s.replicate << ','
        << format_double(s.w_hat) << ',' << format_double(s.error_new) << ','
        << format_double(s.error_legacy) << ',' << (s.z_extinct ? 1 : 0)
        << ',' << (s.y_extinct ? 1 : 0);
    w.line(row.str());
  }
  w.close();
}

void write_rate_report_csv(const std::string& path,
                           const OffspringModel& model,
                           const RateReport& report) {
  CsvWriter w(path);
  w.comment("per-capacity quantiles of |error| and fitted log-log slopes");
  w.comment(model_comment(model, report.config));
  w.comment(slope_comment("slope_new", report.slope_new));
  w.comment(slope_comment("slope_legacy", report.slope_legacy));
  w.comment(
      "slopes fit log(first conditional quantile) against log(k); cond "
      "series are conditional on envelope survival at the horizon");
  w.line(
      "k,n1,replicates,survivors,undersampled,level,q_new_cond,"
      "q_legacy_cond,q_new_all,q_legacy_all");
  const auto& levels = report.config.quantile_levels;
  for (const auto& pt : report.points) {
    for (std::size_t li = 0; li < levels.size(); ++li) {
      std::ostringstream row;
      row << format_double(pt.k) << ',' << pt.n1 << ',' << pt.replicates
          << ',' << pt.survivors << ',' << (pt.undersampled ? 1 : 0) << ','
          << format_double(levels[li]) << ','
          << format_double(pt.q_new_cond[li]) << ','
          << format_double(pt.q_legacy_cond[li]) << ','
          << format_double(pt.q_new_all[li]) << ','
          << format_double(pt.q_legacy_all[li]);
      w.line(row.str());
    }
  }
  w.close();
}

}  // namespace capsim
