#include "qsint/qsint.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "qsint/algebra.hpp"
#include "qsint/app.hpp"

struct qsint_system {
  qsint::ResolvedSystem rs;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qsint_status fail(qsint_status st, const std::string& what) {
  g_last_error = what;
  return st;
}

int run_impl(const char* command, const char* config_json, char** report, bool force_json) {
  if (!command || !report) {
    g_last_error = "null argument";
    return QSINT_INVALID_ARGUMENT;
  }
  *report = nullptr;
  g_last_error.clear();
  try {
    const std::string_view cfg = config_json ? config_json : "";
    qsint::Report r = qsint::run_command_json(command, cfg);
    std::string out = r.json;
    if (!force_json) {
      try {
        if (qsint::parse_config(cfg).output == "text") out = r.text;
      } catch (const qsint::ConfigError&) {
        // parse failure already reported in the JSON
      }
    }
    *report = dup_string(out);
    if (r.exit_code == 1) g_last_error = "numerical check failed";
    if (r.exit_code >= 2) g_last_error = r.error;
    return r.exit_code;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QSINT_RUNTIME_ERROR;
  }
}

}  // namespace

extern "C" {

const char* qsint_version(void) { return "0.1.0"; }
const char* qsint_schema_version(void) { return qsint::kSchemaVersion; }
const char* qsint_last_error(void) { return g_last_error.c_str(); }
void qsint_string_free(char* s) { std::free(s); }

int qsint_run(const char* command, const char* config_json, char** report) {
  return run_impl(command, config_json, report, false);
}

int qsint_run_json(const char* command, const char* config_json, char** report) {
  return run_impl(command, config_json, report, true);
}

qsint_status qsint_system_create(const char* config_json, qsint_system** out) {
  if (!out) return fail(QSINT_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  try {
    const qsint::RunConfig cfg = qsint::parse_config(config_json ? config_json : "");
    auto sys = new qsint_system{qsint::resolve_system(cfg, 0, cfg.hbar.front())};
    *out = sys;
    g_last_error.clear();
    return QSINT_OK;
  } catch (const qsint::ConfigError& e) {
    return fail(QSINT_CONFIG_ERROR, e.what());
  } catch (const std::exception& e) {
    return fail(QSINT_RUNTIME_ERROR, e.what());
  }
}

void qsint_system_destroy(qsint_system* sys) { delete sys; }

qsint_status qsint_system_integrability(const qsint_system* sys, int samples, uint64_t seed,
                                        double* ha, double* hb) {
  if (!sys || !ha || !hb || samples < 1) return fail(QSINT_INVALID_ARGUMENT, "bad argument");
  try {
    const auto& rs = sys->rs;
    const auto pts = rs.domain.sample(seed, samples);
    *ha = qsint::commutator_residual(rs.base.H, rs.base.A, pts, rs.env);
    *hb = std::numeric_limits<double>::quiet_NaN();
    if (rs.B) *hb = qsint::commutator_residual(rs.base.H, *rs.B, pts, rs.env);
    g_last_error.clear();
    return QSINT_OK;
  } catch (const std::exception& e) {
    return fail(QSINT_RUNTIME_ERROR, e.what());
  }
}

qsint_status qsint_system_symbol(const qsint_system* sys, int which, double xi, double eta,
                                 double kx, double ky, double* out) {
  if (!sys || !out || (which != 0 && which != 1)) return fail(QSINT_INVALID_ARGUMENT, "bad argument");
  try {
    const auto& rs = sys->rs;
    const qsint::ScalarField wave =
        qsint::exp(kx * qsint::ScalarField::xi() + ky * qsint::ScalarField::eta());
    const qsint::DiffOp& op = which == 0 ? rs.base.H : rs.base.A;
    const qsint::Point p{xi, eta};
    const double applied = qsint::op_apply(op, qsint::as_wavefunction(wave, rs.env), p, rs.env);
    *out = applied / std::exp(kx * xi + ky * eta);
    g_last_error.clear();
    return QSINT_OK;
  } catch (const std::exception& e) {
    return fail(QSINT_RUNTIME_ERROR, e.what());
  }
}

}  // extern "C"
