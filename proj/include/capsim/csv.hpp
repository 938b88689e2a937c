#pragma once

#include <fstream>
#include <string>

#include "capsim/experiments.hpp"
#include "capsim/offspring.hpp"

namespace capsim {

// Shortest round-trip decimal representation, identical on every run.
std::string format_double(double v);

// Line-oriented CSV writer with atomic replace: content goes to path.tmp
// and only an explicit close() renames it over path.  A writer destroyed
// without close() removes the temporary and leaves the target untouched.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter();

  void comment(const std::string& text);  // "# text"
  void line(const std::string& raw);
  void close();

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
  bool open_ = false;
};

// The two experiment outputs: one row per replicate, and one row per
// capacity per quantile level with the slope summary as comment lines.
void write_error_samples_csv(const std::string& path,
                             const OffspringModel& model,
                             const RateReport& report);
void write_rate_report_csv(const std::string& path,
                           const OffspringModel& model,
                           const RateReport& report);

}  // namespace capsim
