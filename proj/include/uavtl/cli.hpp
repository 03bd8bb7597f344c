#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "uavtl/error.hpp"

namespace uavtl::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kConfig = 3,  // configuration, file access and checkpoint load faults
  kData = 4,    // unparsable or invalid input data
  kTraining = 5 // failed training runs and partial reports
};

int exit_code(ErrorKind kind);

struct GenEnvOptions {
  std::optional<std::string> config;
  std::string preset = "env1";
  std::uint64_t seed = 1;
  std::string out = "out";
};

struct IngestOptions {
  std::string grid;
  double gamma_th_db = 0.0;
  std::optional<int> cols;
  std::optional<int> rows;
  std::string out = "out";
};

struct TrainOptions {
  std::string config;
  std::string mode = "scratch";
  std::optional<std::string> base;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> env;
  std::optional<std::string> out;
};

struct CompareOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

struct ReportOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

// Each command writes its files below the output directory and returns an exit code.
int cmd_gen_env(const GenEnvOptions& o, std::ostream& log);
int cmd_ingest(const IngestOptions& o, std::ostream& log);
int cmd_train(const TrainOptions& o, std::ostream& log);
int cmd_compare(const CompareOptions& o, std::ostream& log);
int cmd_report(const ReportOptions& o, std::ostream& log);

// Parses the command line, dispatches, and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uavtl::cli
