#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace homlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `homlab` tool; `args` excludes the program name.
///
///   homlab <expansion|annealed|oracle|bounds|diagrams|markov|fit|compare>
///          [--config PATH] [--seed U64] [--workers INT] [--out DIR]
///          [--set key=value]... [--a PATH --b PATH --z SIGMA]
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace homlab
