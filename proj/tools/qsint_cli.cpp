// qsint command-line driver. Builds a JSON config from flags (over an
// optional --config file) and hands it to the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsint/qsint.h"

using json = nlohmann::ordered_json;

namespace {

std::vector<double> split_reals(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  return out;
}

json interval(const std::string& s, const char* flag) {
  const auto v = split_reals(s, ':');
  if (v.size() != 2) throw CLI::ValidationError(flag, "expected a:b");
  return json::array({v[0], v[1]});
}

struct Flags {
  std::string cls, output, config_file, out_file;
  std::vector<std::string> params, branches;
  std::string hbar, e_range, weights, interval, u_box, v_box;
  std::string lvF, lvG, lvf, lvg, lieF, lieG, lief, lieg;
  std::uint64_t seed = 0;
  int samples = 0, draws = 0, jet_order = 0, grid_n = 0;
  double tol = 0, energy = 0, separation = 0;
  bool oracle = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--class", f.cls, "I1, I2, I3, II1, II2, II3 or general");
  sub->add_option("--param", f.params, "name=value, repeatable");
  sub->add_option("--hbar", f.hbar, "hbar or comma list");
  sub->add_option("--seed", f.seed, "sampling seed (fallback: QSINT_SEED)");
  sub->add_option("--samples", f.samples, "sample points");
  sub->add_option("--draws", f.draws, "random parameter draws");
  sub->add_option("--jet-order", f.jet_order, "highest operator order sampled");
  sub->add_option("--tol", f.tol, "tolerance for every check");
  sub->add_option("--output", f.output, "text or json")->check(CLI::IsMember({"text", "json"}));
  sub->add_option("--config", f.config_file, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--out", f.out_file, "write the report here instead of stdout");
  sub->add_option("--grid-n", f.grid_n, "interior grid points (spectrum)");
  sub->add_option("--e-range", f.e_range, "energy scan a:b (spectrum)");
  sub->add_option("--branches", f.branches, "m,n, repeatable (spectrum)");
  sub->add_option("--u-box", f.u_box, "u interval a:b (spectrum)");
  sub->add_option("--v-box", f.v_box, "v interval a:b (spectrum)");
  sub->add_flag("--oracle", f.oracle, "compare with the dense 2D eigensolver (spectrum)");
  sub->add_option("--interval", f.interval, "eta interval a:b (wkb)");
  sub->add_option("--weights", f.weights, "w1,w2 (wkb)");
  sub->add_option("--energy", f.energy, "E (wkb)");
  sub->add_option("--separation", f.separation, "J (wkb); both branches when omitted");
  sub->add_option("--liouville-F", f.lvF, "poly:c0,c1,...");
  sub->add_option("--liouville-G", f.lvG, "poly:c0,c1,...");
  sub->add_option("--liouville-f", f.lvf, "poly:c0,c1,...");
  sub->add_option("--liouville-g", f.lvg, "poly:c0,c1,...");
  sub->add_option("--lie-F", f.lieF, "poly:c0,c1,...");
  sub->add_option("--lie-G", f.lieG, "poly:c0,c1,...");
  sub->add_option("--lie-f", f.lief, "poly:c0,c1,...");
  sub->add_option("--lie-g", f.lieg, "poly:c0,c1,...");
}

json build_config(CLI::App* sub, const Flags& f) {
  json cfg = json::object();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CLI::ValidationError("--config", e.what());
    }
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");
  }
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--class")) cfg["class"] = f.cls;
  for (const std::string& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--param", "expected name=value");
    try {
      cfg["params"][p.substr(0, eq)] = std::stod(p.substr(eq + 1));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--param", "bad value in " + p);
    }
  }
  try {
    if (given("--hbar")) {
      const auto hs = split_reals(f.hbar, ',');
      cfg["hbar"] = json(hs);
    }
    if (given("--e-range")) cfg["e_range"] = interval(f.e_range, "--e-range");
    if (given("--u-box")) cfg["u_box"] = interval(f.u_box, "--u-box");
    if (given("--v-box")) cfg["v_box"] = interval(f.v_box, "--v-box");
    if (given("--interval")) cfg["interval"] = interval(f.interval, "--interval");
    if (given("--weights")) {
      const auto w = split_reals(f.weights, ',');
      if (w.size() != 2) throw CLI::ValidationError("--weights", "expected w1,w2");
      cfg["weights"] = json(w);
    }
    if (!f.branches.empty()) {
      json br = json::array();
      for (const std::string& b : f.branches) {
        const auto mn = split_reals(b, ',');
        if (mn.size() != 2) throw CLI::ValidationError("--branches", "expected m,n");
        br.push_back({static_cast<int>(mn[0]), static_cast<int>(mn[1])});
      }
      cfg["branches"] = br;
    }
  } catch (const std::invalid_argument& e) {
    throw CLI::ValidationError("number", std::string("cannot parse '") + e.what() + "'");
  }
  if (given("--seed")) {
    cfg["seed"] = f.seed;
  } else if (!cfg.contains("seed")) {
    if (const char* env = std::getenv("QSINT_SEED")) {
      try {
        cfg["seed"] = std::stoull(env);
      } catch (const std::exception&) {
        throw CLI::ValidationError("QSINT_SEED", "not an unsigned integer");
      }
    }
  }
  if (given("--samples")) cfg["samples"] = f.samples;
  if (given("--draws")) cfg["draws"] = f.draws;
  if (given("--jet-order")) cfg["jet_order"] = f.jet_order;
  if (given("--tol")) cfg["tol"] = f.tol;
  if (given("--output")) cfg["output"] = f.output;
  if (given("--grid-n")) cfg["grid_n"] = f.grid_n;
  if (given("--oracle")) cfg["oracle"] = f.oracle;
  if (given("--energy")) cfg["energy"] = f.energy;
  if (given("--separation")) cfg["separation"] = f.separation;
  const std::pair<const char*, const std::string*> lv[] = {
      {"F", &f.lvF}, {"G", &f.lvG}, {"f", &f.lvf}, {"g", &f.lvg}};
  const std::pair<const char*, const std::string*> lie[] = {
      {"F", &f.lieF}, {"G", &f.lieG}, {"f", &f.lief}, {"g", &f.lieg}};
  bool any_lv = false, any_lie = false;
  for (auto [k, v] : lv)
    if (!v->empty()) {
      cfg["general"][k] = *v;
      any_lv = true;
    }
  for (auto [k, v] : lie)
    if (!v->empty()) {
      cfg["general"][k] = *v;
      any_lie = true;
    }
  if (any_lv && any_lie) throw CLI::ValidationError("general", "mixes --liouville-* and --lie-*");
  if (any_lv) cfg["general"]["kind"] = "liouville";
  if (any_lie) cfg["general"]["kind"] = "lie";
  if ((any_lv || any_lie) && !cfg.contains("class")) cfg["class"] = "general";
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum superintegrable systems: verification, fitting, spectra"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qsint_version());
  Flags f;
  const char* names[] = {"verify", "fit", "casimir", "spectrum", "wkb", "catalog"};
  const char* help[] = {"commutators, structure equations, relations and Casimir checks",
                        "least-squares structure constants (hbar grading for several hbar)",
                        "Casimir commutation and closed form",
                        "joint (E, J) spectrum of a Liouville system",
                        "exact WKB-type solutions of a Lie system",
                        "the six classes with formulas and safe domains"};
  std::vector<CLI::App*> subs;
  for (int i = 0; i < 6; ++i) {
    CLI::App* s = app.add_subcommand(names[i], help[i]);
    add_common(s, f);
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  json cfg;
  try {
    cfg = build_config(sub, f);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  char* report = nullptr;
  const int code = qsint_run(sub->get_name().c_str(), cfg.dump().c_str(), &report);
  if (!report) {
    std::cerr << "error: " << qsint_last_error() << "\n";
    return code == 0 ? 3 : code;
  }
  if (!f.out_file.empty()) {
    std::ofstream out(f.out_file, std::ios::binary);
    out << report;
    if (!out) {
      std::cerr << "error: cannot write " << f.out_file << "\n";
      qsint_string_free(report);
      return 3;
    }
  } else {
    std::fputs(report, stdout);
  }
  qsint_string_free(report);
  if (code >= 2) std::cerr << "error: " << qsint_last_error() << "\n";
  return code;
}
