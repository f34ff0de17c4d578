#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdommd/harness.hpp"
#include "pdommd/mmd.hpp"
#include "pdommd/symbols.hpp"

namespace pdommd {

namespace io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// All numeric output goes through one formatter: 17 significant digits,
// which round-trips doubles exactly and keeps every artifact byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

inline void dump_json(const json& j, std::string& out, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
  const std::string pad1(2 * static_cast<std::size_t>(depth + 1), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [k, v] : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad1 + "\"" + escape(k) + "\": ";
      dump_json(v, out, depth + 1);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    bool scalars = true;
    for (const auto& v : j)
      if (v.is_object() || v.is_array()) scalars = false;
    if (scalars) {
      out += "[";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ", ";
        first = false;
        dump_json(v, out, depth);
      }
      out += "]";
    } else {
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad1;
        dump_json(v, out, depth + 1);
      }
      out += "\n" + pad + "]";
    }
  } else if (j.is_number_float()) {
    out += format_double(j.get<double>());
  } else if (j.is_string()) {
    out += "\"" + escape(j.get<std::string>()) + "\"";
  } else {
    out += j.dump();
  }
}

inline std::string dump(const json& j) {
  std::string out;
  dump_json(j, out, 0);
  out += "\n";
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

inline void write_json(const fs::path& path, const json& j) {
  write_text(path, dump(j));
}

inline std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void reject_unknown_keys(const json& obj,
                                const std::vector<std::string>& known,
                                const std::string& where) {
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    bool ok = false;
    for (const auto& name : known)
      if (k == name) ok = true;
    if (!ok) throw UsageError("unknown key \"" + k + "\" in " + where);
  }
}

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::vector<double>> read_csv_rows(const fs::path& path,
                                                      bool* had_header = nullptr) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  if (had_header) *had_header = false;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        row.push_back(v);
        if (used == 0) numeric = false;
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        if (had_header) *had_header = true;
        first = false;
        continue;  // header row
      }
      throw Error("non-numeric row in " + path.string());
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_grid_function_csv(const fs::path& path, const GridFunction& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << (f.grid.dim == 1 ? "x1,re,im\n" : "x1,x2,re,im\n");
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const auto p = f.grid.point(i);
    out << format_double(p[0]) << ",";
    if (f.grid.dim == 2) out << format_double(p[1]) << ",";
    out << format_double(f.values[i].real()) << ","
        << format_double(f.values[i].imag()) << "\n";
  }
}

inline GridFunction read_grid_function_csv(const fs::path& path) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw Error("empty grid function file " + path.string());
  const int dim = static_cast<int>(rows[0].size()) - 2;
  if (dim != 1 && dim != 2)
    throw Error("grid function CSV must have x1[,x2],re,im columns");
  const std::size_t n = rows.size();
  int npa = 0;
  if (dim == 1) {
    npa = static_cast<int>(n);
  } else {
    npa = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (static_cast<std::size_t>(npa) * npa != n)
      throw Error("2D grid function CSV is not a square lattice");
  }
  const double x0 = rows[0][0];
  const double x1 = dim == 1 ? rows[1][0] : rows[npa][0];
  const double spacing = x1 - x0;
  if (!(spacing > 0)) throw Error("grid function CSV is not lattice-ordered");
  const Grid g = make_grid(dim, npa, -x0);
  if (std::abs(g.spacing - spacing) > 1e-9 * std::abs(spacing))
    throw Error("grid function CSV spacing does not match a symmetric lattice");
  GridFunction f(g);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    f.values[i] = cxd(r[static_cast<std::size_t>(dim)],
                      r[static_cast<std::size_t>(dim) + 1]);
  }
  return f;
}

inline void write_sample_csv(const fs::path& path, const SampleSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << (s.dim == 1 ? "x1\n" : "x1,x2\n");
  for (const auto& p : s.points) {
    out << format_double(p[0]);
    if (s.dim == 2) out << "," << format_double(p[1]);
    out << "\n";
  }
}

inline SampleSet read_sample_csv(const fs::path& path) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw Error("empty sample file " + path.string());
  SampleSet s;
  s.dim = static_cast<int>(rows[0].size());
  if (s.dim != 1 && s.dim != 2)
    throw Error("sample CSV must have one or two columns");
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != s.dim)
      throw Error("ragged sample CSV " + path.string());
    s.points.push_back({r[0], s.dim == 2 ? r[1] : 0.0});
  }
  return s;
}

// ---------------------------------------------------------------------------
// symbol description files

inline json grid_to_json(const Grid& g) {
  return json{{"dim", g.dim}, {"n", g.points_per_axis}, {"half_width", g.half_width}};
}

inline Grid grid_from_json(const json& j) {
  reject_unknown_keys(j, {"dim", "n", "half_width"}, "grid");
  return make_grid(j.at("dim").get<int>(), j.at("n").get<int>(),
                   j.at("half_width").get<double>());
}

inline json factor_to_json(const Factor& f, const fs::path& dir,
                           const std::string& stem, int* csv_counter) {
  if (const auto* t = std::get_if<AnalyticTerm>(&f)) {
    return std::visit(
        [&](const auto& v) -> json {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, GaussHermite>) {
            return json{{"kind", "gauss_hermite"},
                        {"degree", v.degree},
                        {"width", v.width},
                        {"center", {v.center[0], v.center[1]}},
                        {"scale_re", v.scale.real()},
                        {"scale_im", v.scale.imag()}};
          } else if constexpr (std::is_same_v<T, PolyGauss>) {
            json cs = json::array();
            for (const auto& pc : v.coeffs)
              cs.push_back(json{{"alpha", {pc.alpha[0], pc.alpha[1]}},
                                {"re", pc.c.real()},
                                {"im", pc.c.imag()}});
            return json{{"kind", "poly_gauss"},
                        {"width", v.width},
                        {"center", {v.center[0], v.center[1]}},
                        {"coeffs", cs}};
          } else if constexpr (std::is_same_v<T, Indicator>) {
            return json{{"kind", "indicator"},
                        {"lo", {v.lo[0], v.lo[1]}},
                        {"hi", {v.hi[0], v.hi[1]}}};
          } else if constexpr (std::is_same_v<T, Poly>) {
            json cs = json::array();
            for (const auto& pc : v.coeffs)
              cs.push_back(json{{"alpha", {pc.alpha[0], pc.alpha[1]}},
                                {"re", pc.c.real()},
                                {"im", pc.c.imag()}});
            return json{{"kind", "poly"}, {"coeffs", cs}};
          } else {
            return json{{"kind", "constant"},
                        {"re", v.value.real()},
                        {"im", v.value.imag()}};
          }
        },
        *t);
  }
  const auto& gf = std::get<GridFunction>(f);
  const std::string name = stem + "_" + std::to_string((*csv_counter)++) + ".csv";
  write_grid_function_csv(dir / name, gf);
  return json{{"kind", "grid_csv"}, {"path", name}};
}

inline std::vector<PolyCoeff> coeffs_from_json(const json& arr) {
  std::vector<PolyCoeff> out;
  for (const auto& c : arr) {
    reject_unknown_keys(c, {"alpha", "re", "im"}, "coefficient");
    PolyCoeff pc;
    const auto& a = c.at("alpha");
    pc.alpha[0] = a.at(0).get<int>();
    pc.alpha[1] = a.size() > 1 ? a.at(1).get<int>() : 0;
    pc.c = cxd(c.at("re").get<double>(),
               c.value("im", 0.0));
    out.push_back(pc);
  }
  return out;
}

inline Factor factor_from_json(const json& j, const fs::path& dir) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gauss_hermite") {
    reject_unknown_keys(
        j, {"kind", "degree", "width", "center", "scale_re", "scale_im"},
        "gauss_hermite factor");
    GaussHermite v;
    v.degree = j.value("degree", 0);
    v.width = j.at("width").get<double>();
    if (j.contains("center")) {
      v.center[0] = j["center"].at(0).get<double>();
      if (j["center"].size() > 1) v.center[1] = j["center"].at(1).get<double>();
    }
    v.scale = cxd(j.value("scale_re", 1.0), j.value("scale_im", 0.0));
    return Factor(AnalyticTerm(v));
  }
  if (kind == "poly_gauss") {
    reject_unknown_keys(j, {"kind", "width", "center", "coeffs"},
                        "poly_gauss factor");
    PolyGauss v;
    v.width = j.at("width").get<double>();
    if (j.contains("center")) {
      v.center[0] = j["center"].at(0).get<double>();
      if (j["center"].size() > 1) v.center[1] = j["center"].at(1).get<double>();
    }
    v.coeffs = coeffs_from_json(j.at("coeffs"));
    return Factor(AnalyticTerm(v));
  }
  if (kind == "indicator") {
    reject_unknown_keys(j, {"kind", "lo", "hi"}, "indicator factor");
    Indicator v;
    v.lo[0] = j.at("lo").at(0).get<double>();
    v.hi[0] = j.at("hi").at(0).get<double>();
    if (j.at("lo").size() > 1) {
      v.lo[1] = j["lo"].at(1).get<double>();
      v.hi[1] = j["hi"].at(1).get<double>();
    }
    return Factor(AnalyticTerm(v));
  }
  if (kind == "poly") {
    reject_unknown_keys(j, {"kind", "coeffs"}, "poly factor");
    Poly v;
    v.coeffs = coeffs_from_json(j.at("coeffs"));
    return Factor(AnalyticTerm(v));
  }
  if (kind == "constant") {
    reject_unknown_keys(j, {"kind", "re", "im"}, "constant factor");
    return Factor(
        AnalyticTerm(ConstantTerm{cxd(j.value("re", 1.0), j.value("im", 0.0))}));
  }
  if (kind == "grid_csv") {
    reject_unknown_keys(j, {"kind", "path"}, "grid_csv factor");
    return Factor(read_grid_function_csv(dir / j.at("path").get<std::string>()));
  }
  if (kind == "feature") {
    reject_unknown_keys(j, {"kind", "name"}, "feature factor");
    return parse_feature(j.at("name").get<std::string>());
  }
  throw UsageError("unknown factor kind \"" + kind + "\"");
}

inline void write_dense_values_csv(const fs::path& path, const DenseSymbol& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "i,j,re,im\n";
  const std::size_t ny = d.grid_y.size();
  for (std::size_t i = 0; i < d.grid_x.size(); ++i)
    for (std::size_t j = 0; j < ny; ++j)
      out << i << "," << j << "," << format_double(d.values[i * ny + j].real())
          << "," << format_double(d.values[i * ny + j].imag()) << "\n";
}

/// Writes a symbol as <name>.json (plus CSV side files) under dir; returns the
/// JSON file path.
inline fs::path write_symbol(const fs::path& dir, const std::string& name,
                             const Symbol& sym) {
  fs::create_directories(dir);
  json j;
  int counter = 0;
  if (const auto* sep = std::get_if<SeparableSymbol>(&sym)) {
    j["type"] = "separable";
    j["grid"] = grid_to_json(sep->grid_x);
    json terms = json::array();
    for (const auto& t : sep->terms)
      terms.push_back(json{{"f", factor_to_json(t.f, dir, name + "_f", &counter)},
                           {"g", factor_to_json(t.g, dir, name + "_g", &counter)}});
    j["terms"] = terms;
  } else {
    const auto& d = std::get<DenseSymbol>(sym);
    j["type"] = "dense";
    j["grid"] = grid_to_json(d.grid_x);
    const std::string csv = name + "_values.csv";
    write_dense_values_csv(dir / csv, d);
    j["values_csv"] = csv;
  }
  const fs::path out = dir / (name + ".json");
  write_json(out, j);
  return out;
}

inline Symbol read_symbol(const fs::path& path) {
  const json j = read_json(path);
  const fs::path dir = path.parent_path();
  const std::string type = j.at("type").get<std::string>();
  if (type == "separable") {
    reject_unknown_keys(j, {"type", "grid", "terms"}, "symbol file");
    SeparableSymbol sym;
    sym.grid_x = grid_from_json(j.at("grid"));
    sym.grid_y = dual_grid(sym.grid_x);
    for (const auto& t : j.at("terms")) {
      reject_unknown_keys(t, {"f", "g"}, "symbol term");
      sym.terms.push_back(
          {factor_from_json(t.at("f"), dir), factor_from_json(t.at("g"), dir)});
    }
    return sym;
  }
  if (type == "dense") {
    reject_unknown_keys(j, {"type", "grid", "values_csv"}, "symbol file");
    DenseSymbol d;
    d.grid_x = grid_from_json(j.at("grid"));
    d.grid_y = dual_grid(d.grid_x);
    d.values.assign(d.grid_x.size() * d.grid_y.size(), cxd{0, 0});
    const auto rows =
        read_csv_rows(dir / j.at("values_csv").get<std::string>());
    for (const auto& r : rows) {
      if (r.size() != 4) throw Error("dense values CSV needs i,j,re,im rows");
      const std::size_t i = static_cast<std::size_t>(r[0]);
      const std::size_t jj = static_cast<std::size_t>(r[1]);
      if (i >= d.grid_x.size() || jj >= d.grid_y.size())
        throw Error("dense values CSV index out of range");
      d.values[i * d.grid_y.size() + jj] = cxd(r[2], r[3]);
    }
    return d;
  }
  if (type == "translation_invariant") {
    reject_unknown_keys(j, {"type", "grid", "profile"}, "symbol file");
    const Grid gx = grid_from_json(j.at("grid"));
    const Grid data = dual_grid(gx);
    const Factor prof = factor_from_json(j.at("profile"), dir);
    GridFunction k(data);
    if (const auto* gf = std::get_if<GridFunction>(&prof)) {
      if (gf->grid != data)
        throw GridMismatch("profile grid must be the dual of the symbol grid");
      k = *gf;
    } else {
      k = sample_term(std::get<AnalyticTerm>(prof), data);
    }
    return from_translation_invariant(k);
  }
  if (type == "universality") {
    reject_unknown_keys(j, {"type", "grid", "eps", "polys"}, "symbol file");
    const Grid gx = grid_from_json(j.at("grid"));
    std::vector<Polynomial> polys;
    for (const auto& p : j.at("polys")) polys.push_back(coeffs_from_json(p));
    return universality_symbol(j.at("eps").get<double>(), polys, gx);
  }
  throw UsageError("unknown symbol type \"" + type + "\"");
}

}  // namespace io
}  // namespace pdommd
