#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmz/errors.hpp"

namespace lmz {

// Child process with piped stdin/stdout. stderr is inherited. Reads take a
// deadline; a timeout, EOF or a dead child throws predictor_unavailable (or
// the kind passed to the constructor).
class Subprocess {
 public:
  Subprocess(const std::vector<std::string>& argv, std::chrono::milliseconds timeout,
             ErrorKind failure_kind = ErrorKind::predictor_unavailable);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void write(std::span<const std::uint8_t> bytes);
  void write_line(const std::string& line);
  std::string read_line();
  std::vector<std::uint8_t> read_exact(std::size_t n);

  // Closes stdin and reaps the child. Returns the exit status, or -1 if it
  // had to be killed.
  int close();
  bool running() const { return pid_ > 0; }

 private:
  void fill();
  [[noreturn]] void unavailable(const std::string& what) const;

  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
  ErrorKind failure_kind_;
  std::vector<std::uint8_t> buffer_;
  std::size_t start_ = 0;
};

// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace lmz
