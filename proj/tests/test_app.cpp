#include <doctest.h>

#include <string>

#include <json.hpp>

#include "qsint/app.hpp"

using namespace qsint;
using nlohmann::json;

namespace {

int exit_of(std::string_view cmd, std::string_view cfg) { return run_command_json(cmd, cfg).exit_code; }

// the text form ends with a wall-clock line
std::string without_timing(const std::string& text) { return text.substr(0, text.find("elapsed_ms:")); }

}  // namespace

TEST_CASE("config defaults and round trip") {
  const RunConfig c = parse_config("");
  CHECK(c.cls == "I1");
  CHECK(c.hbar.size() == 1);
  CHECK(c.seed == 1);
  const RunConfig d = parse_config(config_to_json(c));
  CHECK(config_to_json(d) == config_to_json(c));

  const RunConfig e = parse_config(R"({"class":"II3","hbar":[0.5,1],"params":{"lambda":2},"branches":[[0,2]],"u_box":[-3,4]})");
  CHECK(e.cls == "II3");
  CHECK(e.hbar[0] == 0.5);
  CHECK(e.params.at("lambda") == 2);
  CHECK(e.branches.size() == 1);
  CHECK(e.branches[0].second == 2);
  CHECK(e.u_box.b == 4);
}

TEST_CASE("config errors") {
  for (const char* bad : {"[1]", "{\"class\":\"I9\"}", "{\"foo\":1}", "{\"params\":{\"zeta\":1}}", "{\"hbar\":[]}",
                          "{\"samples\":0}", "{\"branches\":[[1]]}", "{\"general\":{\"kind\":\"other\"}}", "{", "{\"output\":3}"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS((void)parse_config(bad), ConfigError);
    CHECK(exit_of("catalog", bad) == 2);
  }
  CHECK(exit_of("verify", R"({"hbar":0})") == 2);
  CHECK(exit_of("verify", R"({"hbar":[1,-1]})") == 2);
  CHECK(exit_of("frobnicate", "{}") == 2);
  CHECK(exit_of("spectrum", R"({"class":"II1"})") != 0);
  CHECK(exit_of("wkb", R"({"class":"I1"})") != 0);
}

TEST_CASE("field specifications") {
  const ParamEnv env;
  const ScalarField x = ScalarField::xi();
  CHECK(value(parse_field_spec("poly:1,2,3", x), {2, 0}, env) == 17);
  CHECK(value(parse_field_spec("2.5", x), {7, 0}, env) == 2.5);
  CHECK_THROWS((void)parse_field_spec("poly:", x));
  CHECK_THROWS((void)parse_field_spec("poly:1,a", x));
  CHECK_THROWS((void)parse_field_spec("sin", x));
}

TEST_CASE("reports have a stable schema") {
  const Report r = run_command_json("verify", R"({"class":"II1","samples":10})");
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.json);
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["command"] == "verify");
  CHECK(j["status"] == "pass");
  CHECK(j["exit_code"] == 0);
  CHECK(j["config"]["class"] == "II1");
  CHECK(!r.text.empty());

  const Report bad = run_command_json("verify", R"({"hbar":-1})");
  const json e = json::parse(bad.json);
  CHECK(e["error"]["kind"] == "config");
  CHECK(!bad.error.empty());
}

TEST_CASE("reports are deterministic") {
  for (auto [cmd, cfg] : {std::pair{"verify", R"({"class":"II2","samples":8})"},
                          std::pair{"wkb", R"({"class":"II1"})"},
                          std::pair{"catalog", "{}"},
                          std::pair{"spectrum", R"({"class":"general","u_box":[-5,5],"v_box":[-5,5],"general":{"F":"poly:0.5","G":"poly:0.5","f":"poly:0,0,1","g":"poly:0,0,1"}})"}}) {
    CAPTURE(cmd);
    const Report a = run_command_json(cmd, cfg);
    const Report b = run_command_json(cmd, cfg);
    CHECK(a.json == b.json);
    CHECK(without_timing(a.text) == without_timing(b.text));
    CHECK(a.exit_code == 0);
  }
}

TEST_CASE("tolerance override flips the verdict") {
  CHECK(exit_of("verify", R"({"class":"II1","samples":8,"tol":1e-30})") == 1);
}

TEST_CASE("resolved systems") {
  RunConfig c = parse_config(R"({"class":"I2","params":{"lambda":1.25}})");
  const ResolvedSystem r = resolve_system(c, 0, 1.0);
  CHECK(r.tag == ClassTag::I2);
  CHECK(r.env.lambda == 1.25);
  CHECK(r.B.has_value());
  c = parse_config(R"({"class":"general","general":{"kind":"lie","F":"poly:0,1","G":"1"}})");
  const ResolvedSystem g = resolve_system(c, 0, 1.0);
  CHECK(!g.tag);
  CHECK(g.base.kind == SystemKind::Lie);
  CHECK(!g.B);
}
