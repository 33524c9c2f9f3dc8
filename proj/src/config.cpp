#include "amr/config.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "amr/error.hpp"
#include "amr/synthlab.hpp"

namespace amr {

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  std::map<std::string, ConfigDocument::Value> run() {
    std::map<std::string, ConfigDocument::Value> out;
    std::string table;
    while (!eof()) {
      skip_blank();
      if (eof()) break;
      if (peek() == '\n') {
        advance();
        continue;
      }
      if (peek() == '#') {
        skip_comment();
        continue;
      }
      if (peek() == '[') {
        advance();
        skip_spaces();
        table = parse_key();
        skip_spaces();
        expect(']');
        end_line();
        continue;
      }
      const std::string key = parse_key();
      const std::string full = table.empty() ? key : table + "." + key;
      skip_spaces();
      expect('=');
      skip_spaces();
      ConfigDocument::Value v = parse_value();
      end_line();
      if (!out.emplace(full, std::move(v)).second) fail("duplicate key '" + full + "'");
    }
    return out;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + msg);
  }
  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }
  void skip_blank() { skip_spaces(); }
  void skip_comment() {
    while (!eof() && peek() != '\n') advance();
  }
  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  void end_line() {
    skip_spaces();
    if (!eof() && peek() == '#') skip_comment();
    if (!eof()) {
      if (peek() != '\n') fail("unexpected text after value");
      advance();
    }
  }
  void skip_ws_and_comments() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  std::string parse_key() {
    std::string key;
    while (true) {
      skip_spaces();
      std::string part;
      if (!eof() && peek() == '"') {
        part = parse_string();
      } else {
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
          part += peek();
          advance();
        }
      }
      if (part.empty()) fail("expected a key");
      key += part;
      skip_spaces();
      if (!eof() && peek() == '.') {
        key += '.';
        advance();
        continue;
      }
      return key;
    }
  }

  std::string parse_string() {
    expect('"');
    std::string s;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') return s;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = peek();
        advance();
        switch (e) {
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          case '"': s += '"'; break;
          case '\\': s += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        s += c;
      }
    }
  }

  ConfigDocument::Value parse_value() {
    using Kind = ConfigDocument::Value::Kind;
    ConfigDocument::Value v;
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') {
      v.kind = Kind::string;
      v.text = parse_string();
      return v;
    }
    if (c == '[') {
      v.kind = Kind::array;
      advance();
      skip_ws_and_comments();
      while (!eof() && peek() != ']') {
        ConfigDocument::Value item = parse_value();
        if (item.kind == Kind::array) fail("nested arrays are not supported");
        v.items.push_back(std::move(item));
        skip_ws_and_comments();
        if (!eof() && peek() == ',') {
          advance();
          skip_ws_and_comments();
        } else {
          break;
        }
      }
      expect(']');
      return v;
    }
    std::string token;
    while (!eof()) {
      const char d = peek();
      if (d == ',' || d == ']' || d == '#' || d == '\n' || d == ' ' || d == '\t' || d == '\r') break;
      token += d;
      advance();
    }
    if (token == "true" || token == "false") {
      v.kind = Kind::boolean;
      v.flag = token == "true";
      return v;
    }
    token.erase(std::remove(token.begin(), token.end(), '_'), token.end());
    if (token.empty()) fail("missing value");
    double probe = 0.0;
    const char* b = token.data() + (token[0] == '+' ? 1 : 0);
    const std::string_view body(b, static_cast<std::size_t>(token.data() + token.size() - b));
    if (body == "inf" || body == "-inf" || body == "nan") {
      v.kind = Kind::number;
      v.text = token;
      return v;
    }
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), probe);
    if (ec != std::errc() || ptr != body.data() + body.size()) fail("cannot parse value '" + token + "'");
    v.kind = Kind::number;
    v.text = std::string(body);
    return v;
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

double to_double(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), v);
  return v;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text, const std::string& source) {
  ConfigDocument doc;
  doc.source_ = source;
  doc.values_ = Parser(text, source).run();
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::vector<std::string> ConfigDocument::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

const ConfigDocument::Value& ConfigDocument::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
  return it->second;
}

double ConfigDocument::number(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::number) throw ConfigError(source_ + ": '" + key + "' must be a number");
  return to_double(v.text);
}

std::int64_t ConfigDocument::integer(const std::string& key) const {
  const Value& v = at(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (v.kind != Value::Kind::number || ec != std::errc() || ptr != v.text.data() + v.text.size()) {
    throw ConfigError(source_ + ": '" + key + "' must be an integer");
  }
  return out;
}

std::uint64_t ConfigDocument::unsigned_integer(const std::string& key) const {
  const Value& v = at(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (v.kind != Value::Kind::number || ec != std::errc() || ptr != v.text.data() + v.text.size()) {
    throw ConfigError(source_ + ": '" + key + "' must be a non-negative integer");
  }
  return out;
}

bool ConfigDocument::boolean(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::boolean) throw ConfigError(source_ + ": '" + key + "' must be true or false");
  return v.flag;
}

std::string ConfigDocument::string(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind != Value::Kind::string) throw ConfigError(source_ + ": '" + key + "' must be a string");
  return v.text;
}

std::vector<double> ConfigDocument::numbers(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind == Value::Kind::number) return {to_double(v.text)};
  if (v.kind != Value::Kind::array) throw ConfigError(source_ + ": '" + key + "' must be a number array");
  std::vector<double> out;
  for (const auto& item : v.items) {
    if (item.kind != Value::Kind::number) throw ConfigError(source_ + ": '" + key + "' must hold numbers");
    out.push_back(to_double(item.text));
  }
  return out;
}

std::vector<std::int64_t> ConfigDocument::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (double d : numbers(key)) {
    if (d != std::floor(d)) throw ConfigError(source_ + ": '" + key + "' must hold integers");
    out.push_back(static_cast<std::int64_t>(d));
  }
  return out;
}

std::vector<std::string> ConfigDocument::strings(const std::string& key) const {
  const Value& v = at(key);
  if (v.kind == Value::Kind::string) return {v.text};
  if (v.kind != Value::Kind::array) throw ConfigError(source_ + ": '" + key + "' must be a string array");
  std::vector<std::string> out;
  for (const auto& item : v.items) {
    if (item.kind != Value::Kind::string) throw ConfigError(source_ + ": '" + key + "' must hold strings");
    out.push_back(item.text);
  }
  return out;
}

namespace {

const std::vector<std::string> kEstimatorKeys = {
    "folds",           "seed",          "propensity.max_iter",     "propensity.tol",    "propensity.clip_eps",
    "outcome.learner", "outcome.ridge_lambda", "outcome.min_rows", "outcome.ffnn.widths", "outcome.ffnn.epochs",
    "outcome.ffnn.batch", "outcome.ffnn.step", "outcome.ffnn.seed", "weights.method",  "weights.lambda_grid",
    "weights.gamma_multipliers", "weights.cv_folds", "weights.seed", "weights.bandwidth", "weights.max_anchors", "weights.centering"};

const std::vector<std::string> kExperimentKeys = {
    "reps", "grid.n", "grid.p_i", "alpha", "estimators", "master_seed", "workers", "timing",
    "simulation.p_c", "simulation.p_o", "simulation.p_s", "simulation.effect", "simulation.sigma", "simulation.mu0"};

void check_known(const ConfigDocument& doc, const std::vector<std::vector<std::string>>& lists) {
  std::set<std::string> known;
  for (const auto& l : lists) known.insert(l.begin(), l.end());
  for (const auto& k : doc.keys())
    if (!known.count(k)) throw ConfigError("unknown configuration key '" + k + "'");
}

int as_int(std::int64_t v, const std::string& key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError("'" + key + "' is out of range");
  }
  return static_cast<int>(v);
}

void apply_estimator_keys(const ConfigDocument& doc, EstimatorConfig& cfg) {
  if (doc.has("folds")) cfg.folds = as_int(doc.integer("folds"), "folds");
  if (doc.has("seed")) cfg.seed = doc.unsigned_integer("seed");
  if (doc.has("propensity.max_iter")) cfg.propensity.max_iter = as_int(doc.integer("propensity.max_iter"), "propensity.max_iter");
  if (doc.has("propensity.tol")) cfg.propensity.tol = doc.number("propensity.tol");
  if (doc.has("propensity.clip_eps")) cfg.propensity.clip_eps = doc.number("propensity.clip_eps");
  if (doc.has("outcome.learner")) cfg.outcome.learner = parse_outcome_learner(doc.string("outcome.learner"));
  if (doc.has("outcome.ridge_lambda")) cfg.outcome.ridge_lambda = doc.number("outcome.ridge_lambda");
  if (doc.has("outcome.min_rows")) cfg.outcome.ffnn_min_rows = as_int(doc.integer("outcome.min_rows"), "outcome.min_rows");
  if (doc.has("outcome.ffnn.widths")) {
    cfg.outcome.ffnn.widths.clear();
    for (auto w : doc.integers("outcome.ffnn.widths")) cfg.outcome.ffnn.widths.push_back(as_int(w, "outcome.ffnn.widths"));
  }
  if (doc.has("outcome.ffnn.epochs")) cfg.outcome.ffnn.epochs = as_int(doc.integer("outcome.ffnn.epochs"), "outcome.ffnn.epochs");
  if (doc.has("outcome.ffnn.batch")) cfg.outcome.ffnn.batch = as_int(doc.integer("outcome.ffnn.batch"), "outcome.ffnn.batch");
  if (doc.has("outcome.ffnn.step")) cfg.outcome.ffnn.step = doc.number("outcome.ffnn.step");
  if (doc.has("outcome.ffnn.seed")) cfg.outcome.ffnn.seed = doc.unsigned_integer("outcome.ffnn.seed");
  if (doc.has("weights.method")) cfg.weights.method = parse_weight_method(doc.string("weights.method"));
  if (doc.has("weights.lambda_grid")) cfg.weights.lambda_grid = doc.numbers("weights.lambda_grid");
  if (doc.has("weights.gamma_multipliers")) cfg.weights.gamma_multipliers = doc.numbers("weights.gamma_multipliers");
  if (doc.has("weights.cv_folds")) cfg.weights.folds = as_int(doc.integer("weights.cv_folds"), "weights.cv_folds");
  if (doc.has("weights.seed")) cfg.weights.seed = doc.unsigned_integer("weights.seed");
  if (doc.has("weights.bandwidth")) cfg.weights.bandwidth = doc.number("weights.bandwidth");
  if (doc.has("weights.centering")) cfg.weights.centering = parse_centering(doc.string("weights.centering"));
  if (doc.has("weights.max_anchors")) cfg.weights.max_anchors = doc.integer("weights.max_anchors");
  cfg.weights.validate();
  if (cfg.folds < 1) throw ConfigError("'folds' must be at least 1");
}

}  // namespace

void apply_estimator_config(const ConfigDocument& doc, EstimatorConfig& cfg,
                            const std::vector<std::string>& allowed_extra) {
  check_known(doc, {kEstimatorKeys, allowed_extra});
  apply_estimator_keys(doc, cfg);
}

void apply_experiment_config(const ConfigDocument& doc, ExperimentConfig& cfg) {
  check_known(doc, {kEstimatorKeys, kExperimentKeys});
  apply_estimator_keys(doc, cfg.estimator);
  if (doc.has("reps")) cfg.reps = as_int(doc.integer("reps"), "reps");
  if (doc.has("grid.n")) {
    cfg.grid_n.clear();
    for (auto v : doc.integers("grid.n")) cfg.grid_n.push_back(static_cast<Index>(v));
  }
  if (doc.has("grid.p_i")) {
    cfg.grid_p_i.clear();
    for (auto v : doc.integers("grid.p_i")) cfg.grid_p_i.push_back(as_int(v, "grid.p_i"));
  }
  if (doc.has("alpha")) cfg.alpha = doc.number("alpha");
  if (doc.has("estimators")) {
    cfg.estimators.clear();
    for (const auto& s : doc.strings("estimators")) cfg.estimators.push_back(parse_method(s));
  }
  if (doc.has("master_seed")) cfg.master_seed = doc.unsigned_integer("master_seed");
  if (doc.has("workers")) cfg.workers = as_int(doc.integer("workers"), "workers");
  if (doc.has("timing")) cfg.timing = doc.boolean("timing");
  if (doc.has("simulation.p_c")) cfg.simulation.p_c = as_int(doc.integer("simulation.p_c"), "simulation.p_c");
  if (doc.has("simulation.p_o")) cfg.simulation.p_o = as_int(doc.integer("simulation.p_o"), "simulation.p_o");
  if (doc.has("simulation.p_s")) cfg.simulation.p_s = as_int(doc.integer("simulation.p_s"), "simulation.p_s");
  if (doc.has("simulation.effect")) cfg.simulation.effect = doc.number("simulation.effect");
  if (doc.has("simulation.sigma")) cfg.simulation.sigma = doc.number("simulation.sigma");
  if (doc.has("simulation.mu0")) cfg.simulation.mu0 = parse_mu0_form(doc.string("simulation.mu0"));
  cfg.validate();
}

}  // namespace amr
