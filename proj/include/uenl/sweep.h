#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace uenl {

// One grid dimension: a config key path and the values it takes.
struct SweepAxis {
  std::string key;
  std::vector<nlohmann::ordered_json> values;
};

// "key=v1,v2,v3", each value parsed as JSON (falling back to a string), or
// "key=[v1,v2]" with a JSON array of values, which allows array values.
SweepAxis ParseSweepAxis(std::string_view text);

struct SweepRow {
  // (key, JSON text of the value) for every axis, in grid order.
  std::vector<std::pair<std::string, std::string>> settings;
  std::uint64_t seed = 0;
  std::string score_method;
  // Mean over the OOD sets.
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double error_rate = 0.0;
  double acc = 0.0;
};

// Trains and evaluates every cell of the cross product of `grid` applied
// to `base_config`. Cell i (row-major, last axis fastest) uses seed
// DeriveSeed(base seed, i); an empty grid runs the base config once with
// its own seed. Rows come back in cell order whatever `jobs` is.
std::vector<SweepRow> RunSweep(const nlohmann::ordered_json& base_config,
                               const std::vector<SweepAxis>& grid, std::size_t jobs = 1);

// Columns: one per axis key, then seed, score_method, fpr95, auroc, aupr,
// error_rate, acc.
void WriteSweepCsv(std::ostream& out, const std::vector<SweepAxis>& grid,
                   const std::vector<SweepRow>& rows);

}  // namespace uenl
