#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tubular::cli {

/// Every tunable of the command-line tool. Field defaults are the defaults
/// printed by `--print-defaults`.
struct RunConfig {
  std::string subcommand;
  unsigned threads = 1;
  std::uint64_t seed = 0;

  // Inputs and outputs; which ones are used depends on the subcommand.
  std::string ct;
  std::string label;
  std::string distance;
  std::string p;
  std::string g;
  std::string z;
  std::string mask;
  std::string scales;
  std::string truth;
  std::string pred;
  std::string exclude;
  std::string spec;
  std::string cases;
  std::string case_id = "case";
  std::string out;
  std::string out_dir;

  std::string units = "voxel";
  int bins = 0;  ///< K; 0 = largest class present
  double skeleton_threshold = 0.98;
  double refine_threshold = 0.5;
  double truncation = 4.0;
  double lambda = 1.0;
  double scale_threshold = 3.0;
  std::int64_t edge = 48;
  double hu_lo = -100.0;
  double hu_hi = 240.0;
  std::vector<std::int64_t> center;

  double boundary_noise = 0.0;
  double flip_rate = 0.0;
  double scale_blur = 0.0;
  bool unbalanced = false;

  std::vector<double> tp_list{0.5, 0.9, 0.95, 0.98};
  std::vector<double> tr_list{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

/// JSON dump of the default parameters.
std::string defaults_json();

/// Executes one parsed configuration. Throws tubular::ValidationError or
/// tubular::IoError.
void execute(const RunConfig& config, std::ostream& out);

/// Parses `args` (without the program name) and executes. Returns 0 on
/// success, 1 on invalid input or parameters, 2 on I/O failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tubular::cli
