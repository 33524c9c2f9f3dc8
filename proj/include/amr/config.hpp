#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "amr/bench.hpp"
#include "amr/estimators.hpp"

namespace amr {

/// Parsed configuration file. Supports the TOML subset used by the tools:
/// [tables], bare and dotted keys, numbers, booleans, basic strings, and
/// (possibly multi-line) arrays of those scalars. Keys are stored as full
/// dotted paths, e.g. "weights.lambda_grid".
class ConfigDocument {
 public:
  struct Value {
    enum class Kind { number, boolean, string, array };
    Kind kind = Kind::number;
    std::string text;  // number literal or string contents
    bool flag = false;
    std::vector<Value> items;
  };

  static ConfigDocument parse(std::string_view text, const std::string& source = "<config>");
  static ConfigDocument load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::vector<std::string> keys() const;

  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::string string(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;

 private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> values_;
  std::string source_;
};

/// Applies propensity.*, outcome.*, weights.*, folds and seed. Keys outside
/// `allowed_extra` and the estimator keys raise ConfigError.
void apply_estimator_config(const ConfigDocument& doc, EstimatorConfig& cfg,
                            const std::vector<std::string>& allowed_extra = {});

/// Applies reps, grid.n, grid.p_i, alpha, estimators, master_seed, workers,
/// simulation.* and the estimator keys.
void apply_experiment_config(const ConfigDocument& doc, ExperimentConfig& cfg);

}  // namespace amr
