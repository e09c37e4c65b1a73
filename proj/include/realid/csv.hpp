#ifndef REALID_CSV_HPP_
#define REALID_CSV_HPP_

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace realid {

/// Shortest text form that round-trips a double exactly ("%.17g").
std::string format_g17(double v);

std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a full double; reports the 1-based line number on failure.
double parse_double_field(const std::string& field, std::size_t line_no,
                          const std::string& path);

/// Reads a whole text file into lines (LF or CRLF). Throws if the file
/// cannot be opened or is empty.
std::vector<std::string> read_text_lines(const std::string& path);

/// fopen wrapper that throws on failure and closes on destruction.
struct FileWriter {
  explicit FileWriter(const std::string& path);
  ~FileWriter();
  FileWriter(const FileWriter&) = delete;
  FileWriter& operator=(const FileWriter&) = delete;
  std::FILE* get() { return f_; }

 private:
  std::FILE* f_ = nullptr;
};

}  // namespace realid

#endif  // REALID_CSV_HPP_
