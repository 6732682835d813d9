#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace ccmm::cli {

enum class Format { jsonl, csv };

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool allow_inconsistent = false;
  Format format = Format::jsonl;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitParseError = 2;

// Records go to `out`, diagnostics to `err`.
int cmd_run(const std::string& path, std::ostream& out, std::ostream& err, const Flags& flags);
int cmd_check(const std::string& path, std::ostream& out, std::ostream& err, const Flags& flags);

}  // namespace ccmm::cli
