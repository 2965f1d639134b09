#include <antidot/config.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace antidot {

namespace {

std::string line_prefix(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : ""; }

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> to_real(const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::int64_t> to_int(const std::string& raw) {
  const std::string s = trim(raw);
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Setter: parses the raw text into the config, returns an error message or "".
using Setter = std::function<std::string(RunConfig&, const std::string&)>;
using Getter = std::function<ConfigValue(const RunConfig&)>;

struct KeySpec {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
};

std::string name(const std::string& s, const std::string& k) { return "[" + s + "]." + k; }

template <typename Ref, typename Check>
KeySpec real_key(const std::string& s, const std::string& k, Ref ref, Check ok, const std::string& range) {
  return {s, k,
          [=](RunConfig& c, const std::string& raw) -> std::string {
            const auto v = to_real(raw);
            if (!v) return "expected a real number, got '" + trim(raw) + "'";
            if (!ok(*v)) return "out of range: " + name(s, k) + " " + range;
            ref(c) = *v;
            return "";
          },
          [=](const RunConfig& c) -> ConfigValue { return ref(const_cast<RunConfig&>(c)); }};
}

template <typename Ref, typename Check>
KeySpec int_key(const std::string& s, const std::string& k, Ref ref, Check check) {
  return {s, k,
          [=](RunConfig& c, const std::string& raw) -> std::string {
            const auto v = to_int(raw);
            if (!v) return "expected an integer, got '" + trim(raw) + "'";
            const std::string problem = check(*v);
            if (!problem.empty()) return problem;
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(*v);
            return "";
          },
          [=](const RunConfig& c) -> ConfigValue {
            return static_cast<std::int64_t>(ref(const_cast<RunConfig&>(c)));
          }};
}

template <typename Ref>
KeySpec bool_key(const std::string& s, const std::string& k, Ref ref) {
  return {s, k,
          [=](RunConfig& c, const std::string& raw) -> std::string {
            std::string v = trim(raw);
            std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
            if (v == "true" || v == "yes" || v == "on" || v == "1")
              ref(c) = true;
            else if (v == "false" || v == "no" || v == "off" || v == "0")
              ref(c) = false;
            else
              return "expected true or false, got '" + trim(raw) + "'";
            return "";
          },
          [=](const RunConfig& c) -> ConfigValue { return ref(const_cast<RunConfig&>(c)); }};
}

template <typename Ref>
KeySpec string_key(const std::string& s, const std::string& k, Ref ref, std::vector<std::string> allowed = {}) {
  return {s, k,
          [=](RunConfig& c, const std::string& raw) -> std::string {
            const std::string v = trim(raw);
            if (v.empty()) return "empty value";
            if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
              std::string list;
              for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
              return "'" + v + "' is not one of {" + list + "}";
            }
            ref(c) = v;
            return "";
          },
          [=](const RunConfig& c) -> ConfigValue { return ref(const_cast<RunConfig&>(c)); }};
}

template <typename Ref, typename Check>
KeySpec list_key(const std::string& s, const std::string& k, Ref ref, Check ok, const std::string& range) {
  return {s, k,
          [=](RunConfig& c, const std::string& raw) -> std::string {
            std::vector<double> out;
            std::stringstream ss(raw);
            std::string item;
            while (std::getline(ss, item, ',')) {
              const auto v = to_real(item);
              if (!v) return "expected a comma-separated list of reals, got '" + trim(item) + "'";
              if (!ok(*v)) return "out of range: every entry of " + name(s, k) + " " + range;
              out.push_back(*v);
            }
            if (out.empty()) return "empty list";
            ref(c) = out;
            return "";
          },
          [=](const RunConfig& c) -> ConfigValue { return ref(const_cast<RunConfig&>(c)); }};
}

auto range_int(const std::string& s, const std::string& k, std::int64_t lo, std::int64_t hi) {
  return [=](std::int64_t v) -> std::string {
    if (v < lo || v > hi)
      return "out of range: " + name(s, k) + " ∈ [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
    return "";
  };
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    // [potential]
    t.push_back(string_key("potential", "shape", [](RunConfig& c) -> std::string& { return c.potential.shape; },
                           {"disk", "square", "annulus", "grid", "modes"}));
    t.push_back(real_key("potential", "r", [](RunConfig& c) -> double& { return c.potential.r; },
                         [](double v) { return v > 0 && v < 0.5; }, "∈ (0,1/2)"));
    t.push_back(real_key("potential", "a", [](RunConfig& c) -> double& { return c.potential.a; },
                         [](double v) { return v > 0 && v <= 1; }, "∈ (0,1]"));
    t.push_back(int_key("potential", "N", [](RunConfig& c) -> int& { return c.potential.N; },
                        range_int("potential", "N", 2, 1000)));
    t.push_back(int_key("potential", "width", [](RunConfig& c) -> int& { return c.potential.width; },
                        range_int("potential", "width", 1, 999)));
    t.push_back(string_key("potential", "path", [](RunConfig& c) -> std::string& { return c.potential.path; }));
    t.push_back(real_key("potential", "height", [](RunConfig& c) -> double& { return c.potential.height; },
                         [](double v) { return v != 0; }, "must be nonzero"));
    t.push_back(bool_key("potential", "normalized", [](RunConfig& c) -> bool& { return c.potential.normalized; }));
    // [fiber]
    t.push_back(real_key("fiber", "alpha", [](RunConfig& c) -> double& { return c.fiber.alpha; },
                         [](double v) { return v > 0 && v <= 1; }, "∈ (0,1]"));
    t.push_back(real_key("fiber", "beta", [](RunConfig& c) -> double& { return c.fiber.beta; },
                         [](double v) { return v >= 0; }, "≥ 0"));
    t.push_back(int_key("fiber", "M", [](RunConfig& c) -> int& { return c.fiber.M; }, range_int("fiber", "M", 1, 512)));
    t.push_back({"fiber", "solver",
                 [](RunConfig& c, const std::string& raw) -> std::string {
                   const std::string v = trim(raw);
                   if (v == "dense")
                     c.fiber.solver = SolverKind::dense;
                   else if (v == "iterative")
                     c.fiber.solver = SolverKind::iterative;
                   else
                     return "'" + v + "' is not one of {dense, iterative}";
                   return "";
                 },
                 [](const RunConfig& c) -> ConfigValue { return to_string(c.fiber.solver); }});
    t.push_back(real_key("fiber", "residual_tol", [](RunConfig& c) -> double& { return c.fiber.residual_tol; },
                         [](double v) { return v >= 1e-14 && v <= 1e-3; }, "∈ [1e-14, 1e-3]"));
    t.push_back(real_key("fiber", "memory_limit_mb", [](RunConfig& c) -> double& { return c.fiber.memory_limit_mb; },
                         [](double v) { return v > 0; }, "> 0"));
    t.push_back(int_key("fiber", "bands", [](RunConfig& c) -> int& { return c.fiber.bands; },
                        range_int("fiber", "bands", 2, 100000)));
    // [scan]
    t.push_back(int_key("scan", "grid_n", [](RunConfig& c) -> int& { return c.scan.grid_n; },
                        [](std::int64_t v) -> std::string {
                          if (v % 2 == 0) return "grid_n must be odd";
                          if (v < 3 || v > 1025) return "out of range: [scan].grid_n ∈ [3, 1025]";
                          return "";
                        }));
    t.push_back(int_key("scan", "refine_depth", [](RunConfig& c) -> int& { return c.scan.refine_depth; },
                        range_int("scan", "refine_depth", 0, 12)));
    t.push_back(bool_key("scan", "half_zone", [](RunConfig& c) -> bool& { return c.scan.half_zone; }));
    // [sweep]
    t.push_back(list_key("sweep", "alphas", [](RunConfig& c) -> std::vector<double>& { return c.sweep.alphas; },
                         [](double v) { return v > 0 && v <= 1; }, "∈ (0,1]"));
    t.push_back(list_key("sweep", "betas", [](RunConfig& c) -> std::vector<double>& { return c.sweep.betas; },
                         [](double v) { return v > 0; }, "> 0"));
    t.push_back(real_key("sweep", "cutoff_c", [](RunConfig& c) -> double& { return c.sweep.cutoff_c; },
                         [](double v) { return v > 0; }, "> 0"));
    t.push_back(int_key("sweep", "cutoff_min", [](RunConfig& c) -> int& { return c.sweep.cutoff_min; },
                        range_int("sweep", "cutoff_min", 1, 512)));
    t.push_back(int_key("sweep", "dense_limit", [](RunConfig& c) -> int& { return c.sweep.dense_limit; },
                        range_int("sweep", "dense_limit", 2, 1 << 30)));
    t.push_back(real_key("sweep", "L", [](RunConfig& c) -> double& { return c.sweep.L; },
                         [](double v) { return v > 0; }, "> 0"));
    t.push_back(real_key("sweep", "mu", [](RunConfig& c) -> double& { return c.sweep.mu; },
                         [](double v) { return v >= 0; }, "≥ 0"));
    t.push_back(real_key("sweep", "hbar_vf", [](RunConfig& c) -> double& { return c.sweep.hbar_vf; },
                         [](double v) { return v > 0; }, "> 0"));
    // [feshbach]
    auto in_cell = [](double v) { return v >= -0.5 && v <= 0.5; };
    t.push_back(real_key("feshbach", "k1", [](RunConfig& c) -> double& { return c.feshbach.k1; }, in_cell,
                         "∈ [-1/2,1/2]"));
    t.push_back(real_key("feshbach", "k2", [](RunConfig& c) -> double& { return c.feshbach.k2; }, in_cell,
                         "∈ [-1/2,1/2]"));
    t.push_back(real_key("feshbach", "z", [](RunConfig& c) -> double& { return c.feshbach.z; },
                         [](double v) { return std::abs(v) <= kPi / 2; }, "∈ [-π/2,π/2]"));
    // [kernel]
    t.push_back(real_key("kernel", "r_min", [](RunConfig& c) -> double& { return c.kernel.r_min; },
                         [](double v) { return v > 0; }, "> 0"));
    t.push_back(real_key("kernel", "r_max", [](RunConfig& c) -> double& { return c.kernel.r_max; },
                         [](double v) { return v > 0 && v <= 50; }, "∈ (0,50]"));
    t.push_back(int_key("kernel", "samples", [](RunConfig& c) -> int& { return c.kernel.samples; },
                        range_int("kernel", "samples", 2, 1000000)));
    // [output]
    t.push_back(string_key("output", "dir", [](RunConfig& c) -> std::string& { return c.output.dir; }));
    t.push_back(bool_key("output", "per_k_csv", [](RunConfig& c) -> bool& { return c.output.per_k_csv; }));
    t.push_back(int_key("output", "seed", [](RunConfig& c) -> std::uint64_t& { return c.output.seed; },
                        range_int("output", "seed", 0, std::numeric_limits<std::int64_t>::max())));
    return t;
  }();
  return table;
}

const std::vector<std::string> kSections{"potential", "fiber", "scan", "sweep", "feshbach", "kernel", "output"};

// Keys of [potential] that belong to each shape.
const std::map<std::string, std::vector<std::string>>& shape_keys() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"disk", {"r"}}, {"square", {"a"}}, {"annulus", {"N", "width"}}, {"grid", {"path"}}, {"modes", {"path"}}};
  return m;
}

}  // namespace

ConfigError::ConfigError(int l, const std::string& message) : ValidationError(line_prefix(l) + message), line(l) {}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  RunConfig cfg;
  std::map<std::string, int> seen;  // "[s].k" -> line
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (line_no == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
        throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_no, "key '" + key + "' appears before any [section]");
    const auto& table = key_table();
    const auto spec = std::find_if(table.begin(), table.end(),
                                   [&](const KeySpec& k) { return k.section == section && k.key == key; });
    if (spec == table.end()) throw ConfigError(line_no, "unknown key " + name(section, key));
    const std::string full = name(section, key);
    if (seen.count(full))
      throw ConfigError(line_no, "duplicate key " + full + " (first set on line " + std::to_string(seen[full]) + ")");
    seen[full] = line_no;
    const std::string problem = spec->set(cfg, value);
    if (!problem.empty()) throw ConfigError(line_no, full + " = " + value + ": " + problem);
  }

  // Cross-key checks.
  auto line_of = [&](const std::string& s, const std::string& k) {
    const auto it = seen.find(name(s, k));
    return it == seen.end() ? 0 : it->second;
  };
  const auto& shape = cfg.potential.shape;
  if (shape.empty()) throw ConfigError(0, "[potential].shape is required");
  const auto& own = shape_keys().at(shape);
  for (const auto& [sh, keys] : shape_keys())
    for (const auto& k : keys)
      if (seen.count(name("potential", k)) && std::find(own.begin(), own.end(), k) == own.end())
        throw ConfigError(line_of("potential", k), name("potential", k) + " is not used by shape " + shape);
  for (const auto& k : own)
    if (!seen.count(name("potential", k)))
      throw ConfigError(0, name("potential", k) + " is required for shape " + shape);
  if (shape == "annulus" && !(cfg.potential.N > cfg.potential.width))
    throw ConfigError(line_of("potential", "width"), "[potential] annulus needs N > width");
  if (!cfg.potential.path.empty() && !base_dir.empty() && std::filesystem::path(cfg.potential.path).is_relative())
    cfg.potential.path = (std::filesystem::path(base_dir) / cfg.potential.path).string();
  const auto& b = cfg.sweep.betas;
  for (std::size_t i = 1; i < b.size(); ++i)
    if (!(b[i] > b[i - 1])) throw ConfigError(line_of("sweep", "betas"), "[sweep].betas must be strictly ascending");
  if (!(cfg.kernel.r_max > cfg.kernel.r_min))
    throw ConfigError(line_of("kernel", "r_max"), "[kernel] needs r_min < r_max");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::vector<std::pair<std::string, std::vector<std::pair<std::string, ConfigValue>>>> config_echo(
    const RunConfig& config) {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, ConfigValue>>>> out;
  for (const auto& s : kSections) out.emplace_back(s, std::vector<std::pair<std::string, ConfigValue>>{});
  std::set<std::string> shape_specific;
  for (const auto& [sh, keys] : shape_keys()) shape_specific.insert(keys.begin(), keys.end());
  const auto& own = shape_keys().count(config.potential.shape) ? shape_keys().at(config.potential.shape)
                                                               : std::vector<std::string>{};
  for (const KeySpec& k : key_table()) {
    if (k.section == "potential" && shape_specific.count(k.key) &&
        std::find(own.begin(), own.end(), k.key) == own.end())
      continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == k.section; });
    it->second.emplace_back(k.key, k.get(config));
  }
  return out;
}

namespace {

std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read profile file '" + path + "'");
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto v = to_real(tok);
      if (!v) throw ValidationError(path + ":" + std::to_string(line_no) + ": not a number '" + tok + "'");
      values.push_back(*v);
    }
  }
  return values;
}

}  // namespace

MassProfile build_profile(const PotentialConfig& c) {
  MassProfile p = [&] {
    if (c.shape == "disk") return MassProfile::disk(c.r, c.height);
    if (c.shape == "square") return MassProfile::square(c.a, c.height);
    if (c.shape == "annulus") return annulus_profile(c.N, c.width).scaled(c.height);
    if (c.shape == "grid") {
      const std::vector<double> v = read_numbers(c.path);
      const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v.size()))));
      if (static_cast<std::size_t>(n) * n != v.size())
        throw ValidationError("grid profile '" + c.path + "' must hold n*n values, found " + std::to_string(v.size()));
      return MassProfile::grid(n, v, c.height);
    }
    if (c.shape == "modes") {
      // m1, m2, re, im per line; a header line is skipped.
      std::ifstream in(c.path);
      if (!in) throw ValidationError("cannot read profile file '" + c.path + "'");
      std::map<std::pair<int, int>, cplx> coeffs;
      std::string line;
      int line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) cols.push_back(trim(item));
        if (line_no == 1 && !cols.empty() && !to_real(cols[0])) continue;
        if (cols.size() != 4)
          throw ValidationError(c.path + ":" + std::to_string(line_no) + ": expected m1,m2,re,im");
        const auto m1 = to_int(cols[0]), m2 = to_int(cols[1]);
        const auto re = to_real(cols[2]), im = to_real(cols[3]);
        if (!m1 || !m2 || !re || !im)
          throw ValidationError(c.path + ":" + std::to_string(line_no) + ": malformed entry");
        coeffs[{static_cast<int>(*m1), static_cast<int>(*m2)}] = cplx(*re, *im);
      }
      return MassProfile::modes(coeffs, c.height);
    }
    throw ValidationError("[potential].shape '" + c.shape + "' is not supported");
  }();
  return c.normalized ? normalize(p) : p;
}

}  // namespace antidot
