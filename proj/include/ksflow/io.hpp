#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ksflow/dynamics.hpp"
#include "ksflow/nonlinearity.hpp"

namespace ksflow {

struct ExperimentConfig {
  // grid
  int d = 1;
  int n = 256;
  double half_length = 32.0;
  // interaction
  SelfInteraction interaction;
  // initial data (ignored when snapshot_path is set)
  InitialDataParams initial;
  std::string snapshot_path;
  // schedule
  Schedule schedule;
  // suites
  bool suite_inequalities = false;
  bool suite_decay = false;
  bool suite_scattering = false;
  bool suite_apriori = false;
  // run
  std::string out_dir = ".";
  bool exploratory = false;
};

// Flat INI-style text: [section] headers, key = value lines, # comments.
std::map<std::string, std::string> parse_flat_config(const std::string& text);
ExperimentConfig config_from_text(const std::string& text);  // throws std::invalid_argument
ExperimentConfig load_config(const std::string& path);

struct Snapshot {
  int format_version = 1;
  int d = 1;
  int n = 0;
  double half_length = 0.0;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  // One projector orbital per term: coefficient then row-major samples.
  std::vector<cplx> coeffs;
  std::vector<std::vector<cplx>> orbitals;
};

Snapshot snapshot_of(const FiniteRankOperator& kappa, double time, std::uint64_t seed,
                     const std::string& config_hash);
FiniteRankOperator operator_of(const Snapshot& snap, const Grid& grid);

// Text manifest (key = value, one per line) followed by a separator line and
// the raw little-endian payload; a 64-bit FNV-1a checksum of the payload is
// recorded in the manifest. Round trips byte-identically.
void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);  // throws std::runtime_error on corruption

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len);
std::string hash_of_text(const std::string& text);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_series_csv(const std::string& path, const NormSeries& series);
CsvTable read_csv(const std::string& path);
std::string format_g17(double v);

}  // namespace ksflow
