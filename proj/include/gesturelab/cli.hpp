#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gesturelab::cli {

/// Runs one command line (argv[0] is the program name). Returns the exit code:
/// 0 on success, the error category's code on a categorized failure, 1 otherwise.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Linear-interpolation resampling, used only with --allow-resample.
std::vector<double> resample_linear(std::span<const double> samples, double from_rate, double to_rate);

}  // namespace gesturelab::cli
