#include "homlab/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace homlab {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 11> kCommands{{
    {Command::field_stats, "field-stats"},
    {Command::solve_cell, "solve-cell"},
    {Command::estimate_fhom, "estimate-fhom"},
    {Command::verify_bounds, "verify-bounds"},
    {Command::subadditivity, "subadditivity"},
    {Command::stationarity, "stationarity"},
    {Command::recession, "recession"},
    {Command::rank_one, "rank-one"},
    {Command::degenerate_divergence, "degenerate-divergence"},
    {Command::degenerate_interface, "degenerate-interface"},
    {Command::glue_check, "glue-check"},
}};

class Parser {
 public:
  std::vector<std::string> errors;

  void error(const std::string& where, const std::string& what) { errors.push_back(where + ": " + what); }

  void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, _] : obj.items())
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        error(where.empty() ? key : where + "." + key, "unknown key");
  }

  template <class T>
  bool get(const json& obj, const char* key, const std::string& where, T& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return false;
    try {
      out = it->template get<T>();
      return true;
    } catch (const json::exception&) {
      error(where, "wrong type");
      return false;
    }
  }

  double number(const json& obj, const char* key, const std::string& where) {
    double v = std::nan("");
    if (!get(obj, key, where, v)) error(where, "missing number");
    return v;
  }

  DistributionSpec law(const json& j, const std::string& where) {
    DistributionSpec d;
    if (!j.is_object()) {
      error(where, "expected an object with a \"law\" key");
      return d;
    }
    std::string name;
    get(j, "law", where + ".law", name);
    const auto kind = dist_kind_from_string(name);
    if (!kind) {
      error(where + ".law", "unknown law \"" + name + "\"");
      return d;
    }
    d.kind = *kind;
    switch (*kind) {
      case DistKind::constant:
        reject_unknown(j, where, {"law", "value"});
        d = DistributionSpec::constant(number(j, "value", where + ".value"));
        break;
      case DistKind::uniform:
        reject_unknown(j, where, {"law", "lo", "hi"});
        d = DistributionSpec::uniform(number(j, "lo", where + ".lo"), number(j, "hi", where + ".hi"));
        break;
      case DistKind::two_point:
        reject_unknown(j, where, {"law", "v1", "p", "v2"});
        d = DistributionSpec::two_point(number(j, "v1", where + ".v1"), number(j, "p", where + ".p"),
                                        number(j, "v2", where + ".v2"));
        break;
      case DistKind::pareto:
        reject_unknown(j, where, {"law", "x_m", "alpha"});
        d = DistributionSpec::pareto(number(j, "x_m", where + ".x_m"), number(j, "alpha", where + ".alpha"));
        break;
      case DistKind::lognormal:
        reject_unknown(j, where, {"law", "mu", "sigma"});
        d = DistributionSpec::lognormal(number(j, "mu", where + ".mu"), number(j, "sigma", where + ".sigma"));
        break;
    }
    return d;
  }

  FieldSpec field(const json& j) {
    FieldSpec f;
    if (!j.is_object()) {
      error("field", "expected an object");
      return f;
    }
    reject_unknown(j, "field", {"dimension", "structure", "laminate_axis", "isotropic", "diagonal", "lower",
                                "random_offset", "tile"});
    if (!get(j, "dimension", "field.dimension", f.dim)) error("field.dimension", "missing");
    std::string structure = "iid_cubes";
    get(j, "structure", "field.structure", structure);
    if (structure == "iid_cubes") {
      f.structure = Structure::iid_cubes;
    } else if (structure == "laminate") {
      f.structure = Structure::laminate;
    } else if (structure == "periodic") {
      f.structure = Structure::periodic;
    } else {
      error("field.structure", "unknown structure \"" + structure + "\"");
    }
    int axis = 1;
    get(j, "laminate_axis", "field.laminate_axis", axis);
    f.laminate_axis = axis - 1;
    get(j, "isotropic", "field.isotropic", f.isotropic);
    get(j, "random_offset", "field.random_offset", f.random_offset);

    if (f.structure == Structure::periodic) {
      if (!j.contains("tile")) {
        error("field.tile", "periodic fields need a tile");
      } else {
        const json& t = j["tile"];
        reject_unknown(t, "field.tile", {"dims", "diagonal", "lower"});
        get(t, "dims", "field.tile.dims", f.tile.dims);
        get(t, "diagonal", "field.tile.diagonal", f.tile.diagonal);
        get(t, "lower", "field.tile.lower", f.tile.lower);
      }
      if (j.contains("diagonal") || j.contains("lower"))
        error("field", "periodic fields take their values from field.tile");
    } else {
      if (!j.contains("diagonal")) {
        error("field.diagonal", "missing");
      } else if (j["diagonal"].is_array()) {
        for (std::size_t k = 0; k < j["diagonal"].size(); ++k)
          f.diagonal.push_back(law(j["diagonal"][k], "field.diagonal[" + std::to_string(k) + "]"));
      } else {
        const DistributionSpec d = law(j["diagonal"], "field.diagonal");
        f.diagonal.assign(f.isotropic ? 1 : static_cast<std::size_t>(std::max(f.dim, 1)), d);
      }
      if (j.contains("lower")) f.lower = law(j["lower"], "field.lower");
    }
    if (errors.empty()) {
      try {
        f.validate();
      } catch (const ConfigError& e) {
        errors.emplace_back(e.what());
      }
    }
    return f;
  }

  Matrix xi_entry(const json& j, int m, int d, const std::string& where) {
    Matrix out(m, d);
    if (j.is_string()) {
      if (m != 1) {
        error(where, "shorthand strings like \"e1+e2\" need m = 1");
        return out;
      }
      parse_shorthand(j.get<std::string>(), d, where, out);
    } else if (j.is_array() && !j.empty() && j[0].is_number()) {
      if (m != 1 || static_cast<int>(j.size()) != d) {
        error(where, "flat rows need m = 1 and " + std::to_string(d) + " entries");
        return out;
      }
      for (int c = 0; c < d; ++c) out(0, c) = j[static_cast<std::size_t>(c)].get<double>();
    } else if (j.is_array()) {
      if (static_cast<int>(j.size()) != m) {
        error(where, "expected " + std::to_string(m) + " rows");
        return out;
      }
      for (int r = 0; r < m; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != d) {
          error(where, "each row needs " + std::to_string(d) + " numbers");
          return out;
        }
        for (int c = 0; c < d; ++c) {
          if (!row[static_cast<std::size_t>(c)].is_number()) {
            error(where, "entries must be numbers");
            return out;
          }
          out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
      }
    } else if (j.is_object()) {
      reject_unknown(j, where, {"axis", "row", "ray", "scale"});
      double scale = 1.0;
      get(j, "scale", where + ".scale", scale);
      if (j.contains("axis")) {
        int axis = 0, row = 1;
        get(j, "axis", where + ".axis", axis);
        get(j, "row", where + ".row", row);
        if (axis < 1 || axis > d || row < 1 || row > m) {
          error(where, "axis must lie in 1.." + std::to_string(d) + " and row in 1.." + std::to_string(m));
          return out;
        }
        out(row - 1, axis - 1) = scale;
      } else if (j.contains("ray")) {
        out = xi_entry(j["ray"], m, d, where + ".ray") * scale;
      } else {
        error(where, "object form needs \"axis\" or \"ray\"");
      }
    } else {
      error(where, "expected a matrix, a row, a shorthand string or an axis/ray object");
    }
    if (!out.all_finite()) error(where, "entries must be finite");
    return out;
  }

  void parse_shorthand(const std::string& text, int d, const std::string& where, Matrix& out) {
    std::string s;
    for (const char ch : text)
      if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    std::size_t pos = 0;
    if (s.empty()) error(where, "empty shorthand");
    while (pos < s.size()) {
      double sign = 1.0;
      if (s[pos] == '+' || s[pos] == '-') {
        sign = s[pos] == '-' ? -1.0 : 1.0;
        ++pos;
      }
      const std::size_t e = s.find('e', pos);
      if (e == std::string::npos) {
        error(where, "cannot parse \"" + text + "\"");
        return;
      }
      double coef = 1.0;
      if (e > pos) {
        try {
          coef = std::stod(s.substr(pos, e - pos));
        } catch (const std::exception&) {
          error(where, "cannot parse \"" + text + "\"");
          return;
        }
      }
      std::size_t end = e + 1;
      while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
      if (end == e + 1) {
        error(where, "cannot parse \"" + text + "\"");
        return;
      }
      const int axis = std::stoi(s.substr(e + 1, end - e - 1));
      if (axis < 1 || axis > d) {
        error(where, "axis e" + std::to_string(axis) + " outside 1.." + std::to_string(d));
        return;
      }
      out(0, axis - 1) += sign * coef;
      pos = end;
    }
  }
};

}  // namespace

std::string_view to_string(Command c) noexcept {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "unknown";
}

std::optional<Command> command_from_string(std::string_view name) noexcept {
  for (const auto& [cmd, n] : kCommands)
    if (n == name) return cmd;
  return std::nullopt;
}

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::string msg = std::to_string(errors.size()) + " configuration error(s)";
  for (const auto& e : errors) msg += "\n  " + e;
  return msg;
}

}  // namespace

ConfigErrors::ConfigErrors(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigErrors({std::string("json: ") + e.what()});
  }
  if (!j.is_object()) throw ConfigErrors({"json: top level must be an object"});

  Parser p;
  RunConfig cfg;
  p.reject_unknown(j, "",
                   {"schema_version", "description", "command", "field", "m", "xi", "t_list", "N", "seed", "tol",
                    "max_iter", "check_every", "resolution", "workers", "output", "observable", "box", "mc_budget",
                    "partition_depth", "z", "s_list", "points", "deltas", "search_limit", "scans", "interface_at",
                    "scan_start", "instances"});

  int version = kConfigSchemaVersion;
  p.get(j, "schema_version", "schema_version", version);
  if (version != kConfigSchemaVersion)
    p.error("schema_version", "unsupported version " + std::to_string(version));

  std::string command;
  if (!p.get(j, "command", "command", command)) {
    p.error("command", "missing");
  } else if (const auto c = command_from_string(command)) {
    cfg.command = *c;
  } else {
    p.error("command", "unknown command \"" + command + "\"");
  }

  if (j.contains("field"))
    cfg.field = p.field(j["field"]);
  else
    p.error("field", "missing");
  const int d = std::max(cfg.field.dim, 1);

  p.get(j, "m", "m", cfg.components);
  if (cfg.components < 1 || cfg.components > 8) p.error("m", "must lie in 1..8");
  const int m = std::clamp(cfg.components, 1, 8);

  if (j.contains("xi")) {
    const json& x = j["xi"];
    if (!x.is_array() || x.empty()) {
      p.error("xi", "expected a nonempty list");
    } else {
      for (std::size_t k = 0; k < x.size(); ++k)
        cfg.xi.push_back(p.xi_entry(x[k], m, d, "xi[" + std::to_string(k) + "]"));
    }
  } else {
    cfg.xi.push_back(Matrix::unit(m, d, 0, 0));
  }

  p.get(j, "t_list", "t_list", cfg.t_list);
  if (cfg.t_list.empty()) p.error("t_list", "must not be empty");
  for (std::size_t k = 0; k < cfg.t_list.size(); ++k) {
    if (!(cfg.t_list[k] > 0.0) || !std::isfinite(cfg.t_list[k])) p.error("t_list", "entries must be positive");
    if (k > 0 && !(cfg.t_list[k] > cfg.t_list[k - 1])) p.error("t_list", "must be strictly increasing");
  }

  p.get(j, "N", "N", cfg.realizations);
  if (cfg.realizations < 1) p.error("N", "must be >= 1");
  p.get(j, "seed", "seed", cfg.seed);
  p.get(j, "tol", "tol", cfg.solve.tol);
  if (!(cfg.solve.tol > 0.0 && cfg.solve.tol < 1.0)) p.error("tol", "must lie in (0, 1)");
  p.get(j, "max_iter", "max_iter", cfg.solve.max_iter);
  if (cfg.solve.max_iter < 1) p.error("max_iter", "must be >= 1");
  p.get(j, "check_every", "check_every", cfg.solve.check_every);
  if (cfg.solve.check_every < 1) p.error("check_every", "must be >= 1");

  if (j.contains("resolution")) {
    const json& r = j["resolution"];
    p.reject_unknown(r, "resolution", {"cells_per_unit", "min_cells", "max_cells"});
    p.get(r, "cells_per_unit", "resolution.cells_per_unit", cfg.resolution.cells_per_unit);
    p.get(r, "min_cells", "resolution.min_cells", cfg.resolution.min_cells);
    p.get(r, "max_cells", "resolution.max_cells", cfg.resolution.max_cells);
    if (!(cfg.resolution.cells_per_unit > 0.0)) p.error("resolution.cells_per_unit", "must be positive");
    if (cfg.resolution.min_cells < 2) p.error("resolution.min_cells", "must be >= 2");
    if (cfg.resolution.max_cells < cfg.resolution.min_cells || cfg.resolution.max_cells > 512)
      p.error("resolution.max_cells", "must lie in min_cells..512");
  }
  const bool solves = cfg.command != Command::field_stats && cfg.command != Command::degenerate_interface &&
                      cfg.command != Command::glue_check;
  if (solves && cfg.resolution.cells_per_unit > 0.0) {
    for (const double t : cfg.t_list) {
      if (!(t > 0.0)) continue;
      try {
        (void)cfg.resolution.cells_for(t);
      } catch (const ConfigError& e) {
        p.errors.emplace_back(std::string("t_list: ") + e.what());
      }
    }
  }

  if (p.get(j, "workers", "workers", cfg.workers) && cfg.workers < 1) p.error("workers", "must be >= 1");

  if (j.contains("output")) {
    const json& o = j["output"];
    p.reject_unknown(o, "output", {"dir", "dump_minimizers"});
    std::string dir;
    if (p.get(o, "dir", "output.dir", dir)) cfg.out_dir = dir;
    p.get(o, "dump_minimizers", "output.dump_minimizers", cfg.dump_minimizers);
  }

  if (j.contains("observable")) {
    const std::string obs = j["observable"].is_string() ? j["observable"].get<std::string>() : "";
    if (obs == "norm") {
      cfg.observable = {ObservableKind::norm, 0};
    } else if (obs == "lower") {
      cfg.observable = {ObservableKind::lower, 0};
    } else if (obs.rfind("entry", 0) == 0 && obs.size() > 5 && std::isdigit(static_cast<unsigned char>(obs[5]))) {
      const int e = std::atoi(obs.c_str() + 5);
      if (e < 1 || e > d) p.error("observable", "entry index outside 1.." + std::to_string(d));
      cfg.observable = {ObservableKind::entry, e - 1};
    } else {
      p.error("observable", "expected \"norm\", \"lower\" or \"entryK\"");
    }
  }
  if (j.contains("box")) {
    const json& b = j["box"];
    p.reject_unknown(b, "box", {"lo", "hi"});
    p.get(b, "lo", "box.lo", cfg.box.lo);
    p.get(b, "hi", "box.hi", cfg.box.hi);
    if (static_cast<int>(cfg.box.lo.size()) != d || static_cast<int>(cfg.box.hi.size()) != d) {
      p.error("box", "lo and hi need " + std::to_string(d) + " entries");
    } else {
      for (int k = 0; k < d; ++k)
        if (!(cfg.box.hi[static_cast<std::size_t>(k)] > cfg.box.lo[static_cast<std::size_t>(k)]))
          p.error("box", "hi must exceed lo");
    }
  }

  p.get(j, "mc_budget", "mc_budget", cfg.mc_budget);
  if (cfg.mc_budget < 100) p.error("mc_budget", "must be >= 100");
  p.get(j, "partition_depth", "partition_depth", cfg.partition_depth);
  if (cfg.partition_depth < 1 || cfg.partition_depth > 4) p.error("partition_depth", "must lie in 1..4");
  p.get(j, "z", "z", cfg.shift);
  if (j.contains("z") && static_cast<int>(cfg.shift.size()) != d)
    p.error("z", "needs " + std::to_string(d) + " integer entries");
  if (cfg.shift.empty()) {
    cfg.shift.assign(static_cast<std::size_t>(d), 0);
    cfg.shift[0] = 3;
  }
  p.get(j, "s_list", "s_list", cfg.s_list);
  if (cfg.s_list.empty()) p.error("s_list", "must not be empty");
  for (std::size_t k = 0; k < cfg.s_list.size(); ++k) {
    if (!(cfg.s_list[k] >= 1.0)) p.error("s_list", "entries must be >= 1");
    if (k > 0 && !(cfg.s_list[k] > cfg.s_list[k - 1])) p.error("s_list", "must be strictly increasing");
  }
  p.get(j, "points", "points", cfg.segment_points);
  if (cfg.segment_points < 3) p.error("points", "must be >= 3");
  p.get(j, "deltas", "deltas", cfg.deltas);
  if (cfg.deltas.empty()) p.error("deltas", "must not be empty");
  for (const double dl : cfg.deltas)
    if (!(dl > 0.0)) p.error("deltas", "entries must be positive");
  p.get(j, "search_limit", "search_limit", cfg.search_limit);
  if (cfg.search_limit < 1) p.error("search_limit", "must be >= 1");
  p.get(j, "scans", "scans", cfg.scans);
  if (cfg.scans < 2) p.error("scans", "must be >= 2");
  p.get(j, "interface_at", "interface_at", cfg.interface_at);
  if (!(cfg.interface_at > 0.0 && cfg.interface_at < 1.0)) p.error("interface_at", "must lie in (0, 1)");
  p.get(j, "scan_start", "scan_start", cfg.scan_start);
  if (cfg.scan_start < 0) p.error("scan_start", "must be >= 0");
  p.get(j, "instances", "instances", cfg.instances);
  if (cfg.instances < 1) p.error("instances", "must be >= 1");

  if (cfg.command == Command::rank_one && cfg.xi.size() != 2)
    p.error("xi", "rank-one needs exactly two endpoint matrices");

  if (!p.errors.empty()) throw ConfigErrors(std::move(p.errors));
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigErrors({"config: cannot open " + path.string()});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

json law_json(const DistributionSpec& d) {
  switch (d.kind) {
    case DistKind::constant: return {{"law", "constant"}, {"value", d.a}};
    case DistKind::uniform: return {{"law", "uniform"}, {"lo", d.a}, {"hi", d.b}};
    case DistKind::two_point: return {{"law", "two_point"}, {"v1", d.a}, {"p", d.c}, {"v2", d.b}};
    case DistKind::pareto: return {{"law", "pareto"}, {"x_m", d.a}, {"alpha", d.b}};
    case DistKind::lognormal: return {{"law", "lognormal"}, {"mu", d.a}, {"sigma", d.b}};
  }
  return {};
}

}  // namespace

std::string canonical_config(const RunConfig& cfg) {
  json f = {{"dimension", cfg.field.dim},
            {"structure", std::string(to_string(cfg.field.structure))},
            {"laminate_axis", cfg.field.laminate_axis + 1},
            {"isotropic", cfg.field.isotropic},
            {"random_offset", cfg.field.random_offset}};
  if (cfg.field.structure == Structure::periodic) {
    f["tile"] = {{"dims", cfg.field.tile.dims}, {"diagonal", cfg.field.tile.diagonal}, {"lower", cfg.field.tile.lower}};
  } else {
    json diag = json::array();
    for (const auto& d : cfg.field.diagonal) diag.push_back(law_json(d));
    f["diagonal"] = diag;
    if (cfg.field.lower) f["lower"] = law_json(*cfg.field.lower);
  }
  json xi = json::array();
  for (const auto& x : cfg.xi) {
    json rows = json::array();
    for (int r = 0; r < x.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < x.cols(); ++c) row.push_back(x(r, c));
      rows.push_back(row);
    }
    xi.push_back(rows);
  }
  const json j = {
      {"schema_version", kConfigSchemaVersion},
      {"command", std::string(to_string(cfg.command))},
      {"field", f},
      {"m", cfg.components},
      {"xi", xi},
      {"t_list", cfg.t_list},
      {"N", cfg.realizations},
      {"seed", cfg.seed},
      {"tol", cfg.solve.tol},
      {"max_iter", cfg.solve.max_iter},
      {"check_every", cfg.solve.check_every},
      {"resolution",
       {{"cells_per_unit", cfg.resolution.cells_per_unit},
        {"min_cells", cfg.resolution.min_cells},
        {"max_cells", cfg.resolution.max_cells}}},
      {"observable", cfg.observable.kind == ObservableKind::norm    ? std::string("norm")
                     : cfg.observable.kind == ObservableKind::lower ? std::string("lower")
                                                                    : "entry" + std::to_string(cfg.observable.entry + 1)},
      {"box", {{"lo", cfg.box.lo}, {"hi", cfg.box.hi}}},
      {"mc_budget", cfg.mc_budget},
      {"partition_depth", cfg.partition_depth},
      {"z", cfg.shift},
      {"s_list", cfg.s_list},
      {"points", cfg.segment_points},
      {"deltas", cfg.deltas},
      {"search_limit", cfg.search_limit},
      {"scans", cfg.scans},
      {"interface_at", cfg.interface_at},
      {"scan_start", cfg.scan_start},
      {"instances", cfg.instances},
  };
  return j.dump();
}

}  // namespace homlab
