// Exercises only the exported C interface.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "qsint/qsint.h"

TEST_CASE("argument validation") {
  char* out = nullptr;
  CHECK(qsint_run(nullptr, "{}", &out) == QSINT_INVALID_ARGUMENT);
  CHECK(qsint_run("catalog", "{}", nullptr) == QSINT_INVALID_ARGUMENT);
  CHECK(std::strlen(qsint_last_error()) > 0);
  CHECK(qsint_system_create("{}", nullptr) == QSINT_INVALID_ARGUMENT);
  double a = 0, b = 0;
  CHECK(qsint_system_integrability(nullptr, 5, 1, &a, &b) == QSINT_INVALID_ARGUMENT);
  CHECK(qsint_system_symbol(nullptr, 0, 1, 1, 0, 0, &a) == QSINT_INVALID_ARGUMENT);
  qsint_system_destroy(nullptr);
}

TEST_CASE("versions") {
  CHECK(std::string(qsint_schema_version()) == "1.0");
  CHECK(std::strlen(qsint_version()) > 0);
}

TEST_CASE("running commands") {
  char* out = nullptr;
  REQUIRE(qsint_run("catalog", nullptr, &out) == 0);
  REQUIRE(out != nullptr);
  CHECK(std::string(out).find("\"schema_version\"") != std::string::npos);
  qsint_string_free(out);

  out = nullptr;
  CHECK(qsint_run("catalog", R"({"output":"text"})", &out) == 0);
  CHECK(std::string(out).front() != '{');
  qsint_string_free(out);

  out = nullptr;
  CHECK(qsint_run_json("catalog", R"({"output":"text"})", &out) == 0);
  CHECK(std::string(out).front() == '{');
  qsint_string_free(out);

  out = nullptr;
  CHECK(qsint_run("verify", R"({"hbar":0})", &out) == QSINT_CONFIG_ERROR);
  CHECK(std::string(qsint_last_error()).find("hbar") != std::string::npos);
  qsint_string_free(out);
}

TEST_CASE("system handles") {
  qsint_system* sys = nullptr;
  CHECK(qsint_system_create("{\"class\":\"I9\"}", &sys) == QSINT_CONFIG_ERROR);
  CHECK(sys == nullptr);

  REQUIRE(qsint_system_create(R"({"class":"II2","seed":3})", &sys) == QSINT_OK);
  double ha = 1, hb = 1;
  REQUIRE(qsint_system_integrability(sys, 20, 9, &ha, &hb) == QSINT_OK);
  CHECK(ha < 1e-8);
  CHECK(hb < 1e-8);
  CHECK(qsint_system_integrability(sys, 0, 9, &ha, &hb) == QSINT_INVALID_ARGUMENT);
  qsint_system_destroy(sys);

  // flat free Liouville system: H = -hbar^2 d_xi d_eta / (F + G)
  sys = nullptr;
  REQUIRE(qsint_system_create(R"({"class":"general","hbar":0.5,"general":{"F":"poly:0.5","G":"poly:0.5"}})", &sys) == QSINT_OK);
  double s = 0;
  REQUIRE(qsint_system_symbol(sys, 0, 0.3, -0.2, 1.5, 2.0, &s) == QSINT_OK);
  CHECK(std::abs(s + 0.25 * 1.5 * 2.0) < 1e-12);
  CHECK(qsint_system_symbol(sys, 7, 0.3, -0.2, 1.5, 2.0, &s) == QSINT_INVALID_ARGUMENT);
  REQUIRE(qsint_system_integrability(sys, 10, 1, &ha, &hb) == QSINT_OK);
  CHECK(ha < 1e-12);
  CHECK(std::isnan(hb));
  qsint_system_destroy(sys);
}
