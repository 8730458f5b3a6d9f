#include "brm/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "brm/errors.hpp"

namespace brm {

namespace {

constexpr std::pair<Subcommand, std::string_view> kCommands[] = {
    {Subcommand::semicircle, "semicircle"},     {Subcommand::correlation, "correlation"},
    {Subcommand::scaling, "scaling"},           {Subcommand::local_scale, "local-scale"},
    {Subcommand::theory_table, "theory-table"}, {Subcommand::pointwise, "pointwise"},
};

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      auto item = trim(s.substr(start, i - start));
      if (item.empty()) throw ConfigError("empty list item");
      out.push_back(std::move(item));
      start = i + 1;
    }
  }
  return out;
}

double parse_double(const std::string& s) {
  const char* p = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(p, &end);
  if (end == p || *end != '\0' || errno == ERANGE || !std::isfinite(x))
    throw ConfigError("not a number: '" + s + "'");
  return x;
}

long parse_long(const std::string& s) {
  const double x = parse_double(s);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw ConfigError("not an integer: '" + s + "'");
  return static_cast<long>(x);
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw ConfigError("not an unsigned integer: '" + s + "'");
  errno = 0;
  const unsigned long long x = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("seed out of range: '" + s + "'");
  return x;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

std::vector<double> log_range(const std::vector<std::string>& items) {
  if (items.size() != 3) throw ConfigError("range needs 'first, last, count'");
  const double a = parse_double(items[0]), b = parse_double(items[1]);
  const long m = parse_long(items[2]);
  if (!(a > 0.0) || !(b > 0.0) || m < 2) throw ConfigError("log range needs positive ends and count >= 2");
  std::vector<double> out(m);
  for (long i = 0; i < m; ++i)
    out[i] = i == m - 1 ? b : a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(m - 1));
  return out;
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

std::string_view to_string(Subcommand s) {
  for (const auto& [c, name] : kCommands)
    if (c == s) return name;
  return "?";
}

Subcommand parse_subcommand(std::string_view name) {
  for (const auto& [c, n] : kCommands)
    if (n == name) return c;
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Model m) { return m == Model::goe ? "goe" : "band"; }

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_complex(cplx z) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

cplx parse_complex(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ConfigError("empty complex number");
  if (s.back() != 'i') return {parse_double(s), 0.0};
  s.pop_back();
  // Split at the last sign that is not part of an exponent.
  std::size_t cut = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      cut = i;
      break;
    }
  }
  auto imag_part = [](std::string t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return parse_double(t);
  };
  if (cut == std::string::npos) return {0.0, imag_part(s)};
  return {parse_double(s.substr(0, cut)), imag_part(s.substr(cut))};
}

void ExperimentSpec::validate() const {
  if (replicas < 1) throw ConfigError("replicas must be positive");
  if (threads < 0) throw ConfigError("threads must be nonnegative");
  if (model == Model::goe) {
    if (goe_size < 2 && command != Subcommand::scaling) throw ConfigError("goe size must be at least 2");
    if (!(ensemble.v > 0.0)) throw ConfigError("v must be positive");
  } else {
    ensemble.validate();
  }
  for (cplx z : z1)
    if (!(std::abs(z.imag()) > 0.0)) throw ConfigError("z must be off the real axis");
  for (cplx z : z2)
    if (!(std::abs(z.imag()) > 0.0)) throw ConfigError("z must be off the real axis");
  if (!z2.empty() && z2.size() != z1.size()) throw ConfigError("z1 and z2 differ in length");
  switch (command) {
    case Subcommand::semicircle:
      if (matrix_size() > kDenseEigenCap) throw ConfigError("N exceeds the dense eigenvalue cap");
      break;
    case Subcommand::correlation:
      if (z1.empty()) throw ConfigError("correlation needs z1");
      if (replicas < 16) throw ConfigError("correlation needs at least 16 replicas");
      break;
    case Subcommand::scaling:
      if (z1.size() != 1) throw ConfigError("scaling needs exactly one z1");
      if (sizes.size() < 4) throw ConfigError("scaling needs at least 4 sizes");
      if (model == Model::band && bands.size() != sizes.size())
        throw ConfigError("sizes and bands differ in length");
      if (replicas < 16) throw ConfigError("scaling needs at least 16 replicas");
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (model == Model::goe) {
          if (sizes[i] < 2) throw ConfigError("goe size must be at least 2");
          continue;
        }
        if (sizes[i] < 3 || sizes[i] % 2 == 0) throw ConfigError("band sizes must be odd and >= 3");
        if (bands[i] > static_cast<double>(sizes[i])) throw ConfigError("b exceeds N");
        if (!(bands[i] >= 1.0)) throw ConfigError("b must be at least 1");
      }
      break;
    case Subcommand::local_scale:
      if (model != Model::band) throw ConfigError("local-scale needs the band model");
      if (delta.size() < 4) throw ConfigError("local-scale needs at least 4 delta values");
      [[fallthrough]];
    case Subcommand::theory_table:
      for (double d : delta)
        if (!(d > 0.0)) throw ConfigError("delta must be positive");
      if (z1.empty() && delta.empty()) throw ConfigError("theory-table needs z1 or delta");
      if (!delta.empty() && model != Model::band) throw ConfigError("delta grids need the band model");
      break;
    case Subcommand::pointwise:
      if (model != Model::band) throw ConfigError("pointwise needs the band model");
      if (z1.size() != 1) throw ConfigError("pointwise needs exactly one z1");
      if (replicas < 2) throw ConfigError("pointwise needs at least 2 replicas");
      if (!(L >= 0.0)) throw ConfigError("L must be nonnegative");
      for (double b : bands) {
        if (b > static_cast<double>(ensemble.N())) throw ConfigError("b exceeds N");
        if (b * L > static_cast<double>(ensemble.n)) throw ConfigError("bL exceeds n");
      }
      break;
  }
}

ExperimentSpec parse_config(std::string_view text, std::optional<Subcommand> command) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + why);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated table header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "profile" && section != "ensemble" && section != "experiment")
        fail("unknown table '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    if (section.empty()) fail("assignment outside a table");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.empty()) fail("empty value for '" + key + "'");
    if (!entries.emplace(key, Entry{value, line_no}).second) fail("duplicate key '" + key + "'");
  }

  ExperimentSpec s;
  std::map<std::string, Entry> rest = entries;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = rest.find(key);
    if (it == rest.end()) return std::nullopt;
    std::string v = it->second.value;
    rest.erase(it);
    return v;
  };

  std::string kind = "box";
  std::optional<double> param;
  if (auto inline_profile = take("ensemble.profile")) {
    std::string v = *inline_profile;
    if (v.size() < 2 || v.front() != '{' || v.back() != '}')
      throw ConfigError("ensemble.profile must be {kind, param}");
    const auto items = split_list(std::string_view(v).substr(1, v.size() - 2));
    if (items.empty() || items.size() > 2) throw ConfigError("ensemble.profile must be {kind, param}");
    kind = items[0];
    if (items.size() == 2) param = parse_double(items[1]);
    if (entries.count("profile.kind") || entries.count("profile.param"))
      throw ConfigError("profile given twice");
  }
  if (auto k = take("profile.kind")) kind = *k;
  if (auto p = take("profile.param")) param = parse_double(*p);
  const ProfileKind pk = parse_profile_kind(kind);
  if (pk == ProfileKind::power_law && !param) throw ConfigError("power_law needs param");
  try {
    s.ensemble.profile = Profile::make(pk, param.value_or(1.0));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  if (auto m = take("ensemble.model")) {
    if (*m == "band") s.model = Model::band;
    else if (*m == "goe") s.model = Model::goe;
    else throw ConfigError("unknown model '" + *m + "'");
  }
  auto n = take("ensemble.n");
  auto size = take("ensemble.N");
  if (n && size) throw ConfigError("give ensemble.n or ensemble.N, not both");
  if (s.model == Model::goe) {
    if (n) throw ConfigError("goe model takes ensemble.N");
    if (size) s.goe_size = parse_long(*size);
    s.ensemble.n = std::max<long>(1, s.goe_size / 2);
    s.ensemble.b = static_cast<double>(std::max<long>(1, s.goe_size));
  } else {
    if (n) s.ensemble.n = parse_long(*n);
    if (size) {
      const long N = parse_long(*size);
      if (N < 3 || N % 2 == 0) throw ConfigError("band N must be odd and >= 3");
      s.ensemble.n = (N - 1) / 2;
    }
  }
  if (auto b = take("ensemble.b")) s.ensemble.b = parse_double(*b);
  if (auto v = take("ensemble.v")) s.ensemble.v = parse_double(*v);
  if (auto seed = take("ensemble.seed")) s.ensemble.base_seed = parse_u64(*seed);
  if (auto t = take("ensemble.truncation")) s.ensemble.truncation = parse_double(*t);

  const auto cmd = take("experiment.command");
  if (!cmd && !command) throw ConfigError("missing experiment.command");
  s.command = cmd ? parse_subcommand(*cmd) : *command;
  if (command && *command != s.command)
    throw ConfigError("command mismatch: config says " + std::string(to_string(s.command)));
  if (auto r = take("experiment.replicas")) s.replicas = parse_long(*r);
  if (auto t = take("experiment.threads")) s.threads = static_cast<int>(parse_long(*t));
  if (auto d = take("experiment.dense_oracle")) s.dense_oracle = parse_bool(*d);
  auto complexes = [](const std::string& v) {
    std::vector<cplx> out;
    for (const auto& item : split_list(v)) out.push_back(parse_complex(item));
    return out;
  };
  auto doubles = [](const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(parse_double(item));
    return out;
  };
  auto z = take("experiment.z");
  auto z1 = take("experiment.z1");
  if (z && z1) throw ConfigError("give experiment.z or experiment.z1, not both");
  if (z) s.z1 = complexes(*z);
  if (z1) s.z1 = complexes(*z1);
  if (auto z2 = take("experiment.z2")) {
    const std::string v = trim(*z2);
    if (v == "conj") {
      for (cplx x : s.z1) s.z2.push_back(std::conj(x));
    } else {
      s.z2 = complexes(v);
    }
  }
  if (auto v = take("experiment.sizes"))
    for (const auto& item : split_list(*v)) s.sizes.push_back(parse_long(item));
  if (auto v = take("experiment.bands")) s.bands = doubles(*v);
  if (auto v = take("experiment.L")) s.L = parse_double(*v);
  if (auto v = take("experiment.lambda")) s.lambda = doubles(*v);
  auto delta = take("experiment.delta");
  auto delta_range = take("experiment.delta_range");
  if (delta && delta_range) throw ConfigError("give experiment.delta or experiment.delta_range, not both");
  if (delta) s.delta = doubles(*delta);
  if (delta_range) s.delta = log_range(split_list(*delta_range));

  if (!rest.empty()) {
    const auto& [key, e] = *rest.begin();
    throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
  }
  if (s.command == Subcommand::pointwise && s.bands.empty()) s.bands.push_back(s.ensemble.b);
  if (z1 || z) {
    // keep as given
  } else if (s.command == Subcommand::correlation || s.command == Subcommand::scaling) {
    s.z1 = {cplx(0.4, 3.2)};
    if (s.z2.empty()) s.z2 = {cplx(0.4, -3.2)};
  } else if (s.command == Subcommand::pointwise) {
    s.z1 = {cplx(0.0, 3.5)};
  }
  if (s.lambda.empty() && (s.command == Subcommand::local_scale || !s.delta.empty()))
    s.lambda = {0.0};
  s.validate();
  return s;
}

ExperimentSpec load_config_file(const std::string& path, std::optional<Subcommand> command) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception&) {
      throw ConfigError("manifest is not valid JSON");
    }
    if (!j.contains("config") || !j["config"].is_string())
      throw ConfigError("manifest has no config member");
    text = j["config"].get<std::string>();
  }
  return parse_config(text, command);
}

std::string to_config_text(const ExperimentSpec& s) {
  std::ostringstream o;
  auto join_c = [](const std::vector<cplx>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_complex(v[i]);
    return out;
  };
  auto join_d = [](const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
  };
  o << "[profile]\n";
  o << "kind = " << to_string(s.ensemble.profile.kind()) << "\n";
  o << "param = " << format_double(s.ensemble.profile.param()) << "\n\n";
  o << "[ensemble]\n";
  o << "model = " << to_string(s.model) << "\n";
  if (s.model == Model::goe) {
    o << "N = " << s.goe_size << "\n";
  } else {
    o << "n = " << s.ensemble.n << "\n";
    o << "b = " << format_double(s.ensemble.b) << "\n";
  }
  o << "v = " << format_double(s.ensemble.v) << "\n";
  o << "seed = " << s.ensemble.base_seed << "\n";
  o << "truncation = " << format_double(s.ensemble.truncation) << "\n\n";
  o << "[experiment]\n";
  o << "command = " << to_string(s.command) << "\n";
  o << "replicas = " << s.replicas << "\n";
  o << "threads = " << s.threads << "\n";
  o << "dense_oracle = " << (s.dense_oracle ? "true" : "false") << "\n";
  if (!s.z1.empty()) o << "z1 = " << join_c(s.z1) << "\n";
  if (!s.z2.empty()) o << "z2 = " << join_c(s.z2) << "\n";
  if (!s.sizes.empty()) {
    o << "sizes = ";
    for (std::size_t i = 0; i < s.sizes.size(); ++i) o << (i ? ", " : "") << s.sizes[i];
    o << "\n";
  }
  if (!s.bands.empty()) o << "bands = " << join_d(s.bands) << "\n";
  o << "L = " << format_double(s.L) << "\n";
  if (!s.lambda.empty()) o << "lambda = " << join_d(s.lambda) << "\n";
  if (!s.delta.empty()) o << "delta = " << join_d(s.delta) << "\n";
  return o.str();
}

}  // namespace brm
