#include "harness/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <vector>

namespace qkdlab::harness {

using nlohmann::json;

namespace {

constexpr std::pair<Experiment, std::string_view> kExperimentNames[] = {
    {Experiment::run_protocol, "run-protocol"},
    {Experiment::verify_classicalization, "verify-classicalization"},
    {Experiment::verify_local_equivalence, "verify-local-equivalence"},
    {Experiment::verify_security_bounds, "verify-security-bounds"},
    {Experiment::sift_sweep, "sift-sweep"},
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void require_object(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail(where, "unknown key \"" + key + "\"");
  }
}

std::string child(const std::string& where, std::string_view key) { return where + "." + std::string(key); }

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "expected a finite number");
  return v;
}

double get_probability(const json& j, const std::string& where) {
  double v = get_number(j, where);
  if (v < 0.0 || v > 1.0) fail(where, "expected a value in [0, 1]");
  return v;
}

std::uint64_t get_unsigned(const json& j, const std::string& where, std::uint64_t lo = 0,
                           std::uint64_t hi = std::numeric_limits<std::uint64_t>::max()) {
  if (!j.is_number_integer()) fail(where, "expected a non-negative integer");
  if (j.is_number_unsigned()) {
    auto v = j.get<std::uint64_t>();
    if (v < lo || v > hi) fail(where, "value " + std::to_string(v) + " out of range");
    return v;
  }
  auto v = j.get<std::int64_t>();
  if (v < 0) fail(where, "expected a non-negative integer");
  auto u = static_cast<std::uint64_t>(v);
  if (u < lo || u > hi) fail(where, "value " + std::to_string(u) + " out of range");
  return u;
}

std::string get_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

cplx get_complex(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [re, im]");
  return {get_number(j[0], where + "[0]"), get_number(j[1], where + "[1]")};
}

PauliPattern get_pattern(const json& j, const std::string& where) {
  try {
    return PauliPattern::from_string(get_string(j, where));
  } catch (const std::domain_error& e) {
    fail(where, e.what());
  }
}

PureAttackState parse_terms(const json& j) {
  require_object(j, "attack", {"n_pairs", "eve_dim", "terms"});
  for (auto key : {"n_pairs", "eve_dim", "terms"})
    if (!j.contains(key)) fail("attack", std::string("missing \"") + key + "\"");
  auto n_pairs = static_cast<std::size_t>(get_unsigned(j["n_pairs"], "attack.n_pairs", 1, 31));
  auto eve_dim = static_cast<std::size_t>(get_unsigned(j["eve_dim"], "attack.eve_dim", 1, kMaxEveDimension));
  const json& terms = j["terms"];
  if (!terms.is_array() || terms.empty()) fail("attack.terms", "expected a non-empty array");
  std::vector<AttackTerm> parsed;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    std::string where = "attack.terms[" + std::to_string(i) + "]";
    require_object(terms[i], where, {"pattern", "coeff", "eve_state"});
    for (auto key : {"pattern", "coeff", "eve_state"})
      if (!terms[i].contains(key)) fail(where, std::string("missing \"") + key + "\"");
    AttackTerm term{get_pattern(terms[i]["pattern"], child(where, "pattern")),
                    get_complex(terms[i]["coeff"], child(where, "coeff")), {}};
    const json& eve = terms[i]["eve_state"];
    if (!eve.is_array()) fail(child(where, "eve_state"), "expected an array of [re, im]");
    term.eve_state.resize(static_cast<Eigen::Index>(eve.size()));
    for (std::size_t e = 0; e < eve.size(); ++e)
      term.eve_state(static_cast<Eigen::Index>(e)) =
          get_complex(eve[e], child(where, "eve_state") + "[" + std::to_string(e) + "]");
    parsed.push_back(std::move(term));
  }
  try {
    return assemble_attack(parsed, n_pairs, eve_dim);
  } catch (const std::domain_error& e) {
    fail("attack", e.what());
  }
}

NamedAttack parse_named(const json& j) {
  require_object(j, "attack.named", {"kind", "params"});
  if (!j.contains("kind")) fail("attack.named", "missing \"kind\"");
  std::string kind = get_string(j["kind"], "attack.named.kind");
  json params = j.contains("params") ? j["params"] : json::object();
  const std::string where = "attack.named.params";
  if (kind == "none") {
    require_object(params, where, {});
    return NoAttack{};
  }
  if (kind == "intercept_resend") {
    require_object(params, where, {"fraction", "basis"});
    InterceptResend attack;
    if (params.contains("fraction")) attack.fraction = get_probability(params["fraction"], child(where, "fraction"));
    if (params.contains("basis")) {
      std::string basis = get_string(params["basis"], child(where, "basis"));
      if (basis == "Z") attack.basis = InterceptResend::ResendBasis::Z;
      else if (basis == "X") attack.basis = InterceptResend::ResendBasis::X;
      else if (basis == "random") attack.basis = InterceptResend::ResendBasis::random;
      else fail(child(where, "basis"), "expected \"Z\", \"X\" or \"random\"");
    }
    return attack;
  }
  if (kind == "pauli_channel") {
    require_object(params, where, {"p_x", "p_y", "p_z"});
    PauliChannel attack;
    if (params.contains("p_x")) attack.p_x = get_probability(params["p_x"], child(where, "p_x"));
    if (params.contains("p_y")) attack.p_y = get_probability(params["p_y"], child(where, "p_y"));
    if (params.contains("p_z")) attack.p_z = get_probability(params["p_z"], child(where, "p_z"));
    if (attack.p_x + attack.p_y + attack.p_z > 1.0 + 1e-12) fail(where, "p_x + p_y + p_z exceeds 1");
    return attack;
  }
  if (kind == "bell_flip") {
    require_object(params, where, {"pattern"});
    if (!params.contains("pattern")) fail(where, "missing \"pattern\"");
    return BellFlip{get_pattern(params["pattern"], child(where, "pattern"))};
  }
  fail("attack.named.kind", "unknown kind \"" + kind + "\"");
}

RandomAttackSpec parse_random(const json& j) {
  require_object(j, "attack.random", {"n_pairs", "eve_dim", "terms"});
  RandomAttackSpec spec;
  if (!j.contains("n_pairs")) fail("attack.random", "missing \"n_pairs\"");
  spec.n_pairs = static_cast<std::size_t>(get_unsigned(j["n_pairs"], "attack.random.n_pairs", 1, 6));
  if (j.contains("eve_dim"))
    spec.eve_dim = static_cast<std::size_t>(get_unsigned(j["eve_dim"], "attack.random.eve_dim", 1, kMaxEveDimension));
  if (j.contains("terms"))
    spec.terms = static_cast<std::size_t>(get_unsigned(j["terms"], "attack.random.terms", 1, 1u << 12));
  return spec;
}

Pauli parse_kind(const json& j, const std::string& where) {
  std::string s = get_string(j, where);
  if (s == "X") return Pauli::X;
  if (s == "Y") return Pauli::Y;
  if (s == "Z") return Pauli::Z;
  fail(where, "expected \"X\", \"Y\" or \"Z\"");
}

}  // namespace

std::string_view experiment_name(Experiment e) noexcept {
  for (auto [value, name] : kExperimentNames)
    if (value == e) return name;
  return "unknown";
}

std::optional<Experiment> experiment_from_name(std::string_view name) noexcept {
  for (auto [value, n] : kExperimentNames)
    if (n == name) return value;
  return std::nullopt;
}

AttackSpec parse_attack(const json& j, std::size_t default_n_pairs) {
  if (!j.is_object()) fail("attack", "expected an object");
  if (j.contains("named")) {
    require_object(j, "attack", {"named", "n_pairs"});
    NamedAttackSpec spec{parse_named(j["named"]), default_n_pairs};
    if (j.contains("n_pairs")) spec.n_pairs = static_cast<std::size_t>(get_unsigned(j["n_pairs"], "attack.n_pairs", 1, 31));
    if (spec.n_pairs == 0) fail("attack", "named attack needs n_pairs (or protocol.n_pairs_total)");
    if (const auto* flip = std::get_if<BellFlip>(&spec.attack); flip && flip->pattern.size() != spec.n_pairs)
      fail("attack.named.params.pattern", "pattern length differs from n_pairs");
    return spec;
  }
  if (j.contains("random")) {
    require_object(j, "attack", {"random"});
    return parse_random(j["random"]);
  }
  return parse_terms(j);
}

std::size_t attack_pairs(const AttackSpec& spec) noexcept {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PureAttackState>) return s.n_pairs();
        else return s.n_pairs;
      },
      spec);
}

std::size_t ExperimentConfig::sift_m_max() const { return sift.m_max.value_or(protocol.n_pairs_total); }

std::size_t ExperimentConfig::row_count() const {
  if (experiment == Experiment::sift_sweep) return sift_m_max() - sift.m_min + 1;
  return protocol.trials;
}

ExperimentConfig parse_config(const json& j, std::optional<Experiment> experiment) {
  require_object(j, "config",
                 {"experiment", "attack", "protocol", "code", "sift", "plan", "tolerances", "output_dir",
                  "report_format", "threads"});
  ExperimentConfig cfg;

  if (j.contains("experiment")) {
    std::string name = get_string(j["experiment"], "config.experiment");
    auto e = experiment_from_name(name);
    if (!e) fail("config.experiment", "unknown experiment \"" + name + "\"");
    if (experiment && *experiment != *e)
      fail("config.experiment", "file names \"" + name + "\" but the command line asks for \"" +
                                    std::string(experiment_name(*experiment)) + "\"");
    cfg.experiment = *e;
  } else if (experiment) {
    cfg.experiment = *experiment;
  } else {
    fail("config", "no experiment given");
  }

  bool explicit_total = false;
  cfg.protocol.e_check = 0.1;
  cfg.protocol.e_cor = 0.15;
  cfg.protocol.seed = 1;
  cfg.protocol.trials = 100;
  if (j.contains("protocol")) {
    const json& p = j["protocol"];
    require_object(p, "protocol", {"n_pairs_total", "e_check", "e_cor", "seed", "trials", "mode"});
    if (p.contains("n_pairs_total")) {
      cfg.protocol.n_pairs_total =
          static_cast<std::size_t>(get_unsigned(p["n_pairs_total"], "protocol.n_pairs_total", 2, 1u << 20));
      explicit_total = true;
    }
    if (p.contains("e_check")) cfg.protocol.e_check = get_probability(p["e_check"], "protocol.e_check");
    if (p.contains("e_cor")) cfg.protocol.e_cor = get_probability(p["e_cor"], "protocol.e_cor");
    if (p.contains("seed")) cfg.protocol.seed = get_unsigned(p["seed"], "protocol.seed");
    if (p.contains("trials"))
      cfg.protocol.trials = static_cast<std::size_t>(get_unsigned(p["trials"], "protocol.trials", 1, 100'000'000));
    if (p.contains("mode")) {
      std::string mode = get_string(p["mode"], "protocol.mode");
      if (mode == "nonlocal") cfg.protocol.mode = MeasurementMode::nonlocal;
      else if (mode == "local") cfg.protocol.mode = MeasurementMode::local;
      else fail("protocol.mode", "expected \"nonlocal\" or \"local\"");
    }
  }

  if (j.contains("attack")) {
    cfg.attack = parse_attack(j["attack"], explicit_total ? cfg.protocol.n_pairs_total : 0);
    if (!explicit_total) cfg.protocol.n_pairs_total = attack_pairs(*cfg.attack);
  }

  if (j.contains("code")) {
    const json& c = j["code"];
    require_object(c, "code", {"t_x", "t_z"});
    CodeModel code;
    if (c.contains("t_x")) code.t_x = static_cast<std::size_t>(get_unsigned(c["t_x"], "code.t_x"));
    if (c.contains("t_z")) code.t_z = static_cast<std::size_t>(get_unsigned(c["t_z"], "code.t_z"));
    cfg.code = code;
  }

  if (j.contains("sift")) {
    const json& s = j["sift"];
    require_object(s, "sift", {"kind", "m_min", "m_max"});
    if (s.contains("kind")) cfg.sift.kind = parse_kind(s["kind"], "sift.kind");
    if (s.contains("m_min")) cfg.sift.m_min = static_cast<std::size_t>(get_unsigned(s["m_min"], "sift.m_min"));
    if (s.contains("m_max")) cfg.sift.m_max = static_cast<std::size_t>(get_unsigned(s["m_max"], "sift.m_max"));
  }

  if (j.contains("plan")) {
    const json& p = j["plan"];
    require_object(p, "plan", {"checked"});
    if (p.contains("checked")) cfg.checked_pairs = static_cast<std::size_t>(get_unsigned(p["checked"], "plan.checked", 1));
  }

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    require_object(t, "tolerances", {"exact", "entropy", "sigma"});
    auto non_negative = [&](const char* key, double& out) {
      if (!t.contains(key)) return;
      out = get_number(t[key], child("tolerances", key));
      if (out < 0.0) fail(child("tolerances", key), "expected a non-negative number");
    };
    non_negative("exact", cfg.tolerances.exact);
    non_negative("entropy", cfg.tolerances.entropy);
    non_negative("sigma", cfg.tolerances.sigma);
  }

  if (j.contains("output_dir")) cfg.output_dir = get_string(j["output_dir"], "config.output_dir");
  if (j.contains("report_format")) {
    std::string f = get_string(j["report_format"], "config.report_format");
    if (f == "csv") cfg.report_format = ReportFormat::csv;
    else if (f == "json") cfg.report_format = ReportFormat::json;
    else if (f == "both") cfg.report_format = ReportFormat::both;
    else fail("config.report_format", "expected \"csv\", \"json\" or \"both\"");
  }
  if (j.contains("threads"))
    cfg.threads = static_cast<std::size_t>(get_unsigned(j["threads"], "config.threads", 1, 256));

  // Cross-field checks per experiment.
  const bool needs_attack = cfg.experiment != Experiment::sift_sweep;
  if (needs_attack && !cfg.attack) fail("config", "experiment needs an \"attack\"");
  if (cfg.experiment == Experiment::run_protocol || cfg.experiment == Experiment::sift_sweep) {
    try {
      cfg.protocol.validate();
    } catch (const std::domain_error& e) {
      fail("protocol", e.what());
    }
  }
  if (cfg.experiment == Experiment::run_protocol && attack_pairs(*cfg.attack) != cfg.protocol.n_pairs_total)
    fail("attack", "attack covers " + std::to_string(attack_pairs(*cfg.attack)) + " pairs but protocol.n_pairs_total is " +
                       std::to_string(cfg.protocol.n_pairs_total));
  if ((cfg.experiment == Experiment::verify_classicalization || cfg.experiment == Experiment::verify_security_bounds) &&
      std::holds_alternative<NamedAttackSpec>(*cfg.attack))
    fail("attack", "experiment needs a pure attack (\"terms\" or \"random\")");
  if (cfg.attack && cfg.checked_pairs > attack_pairs(*cfg.attack))
    fail("plan.checked", "more checked pairs than the attack has");
  if (cfg.experiment == Experiment::sift_sweep) {
    if (cfg.sift_m_max() > cfg.protocol.n_pairs_total) fail("sift.m_max", "exceeds protocol.n_pairs_total");
    if (cfg.sift.m_min > cfg.sift_m_max()) fail("sift.m_min", "exceeds sift.m_max");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Experiment> experiment) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(j, experiment);
}

}  // namespace qkdlab::harness
