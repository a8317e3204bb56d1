#include "advkit/report.hpp"

#include <sstream>

#include "advkit/error.hpp"
#include "advkit/io.hpp"
#include "advkit/model_io.hpp"

namespace advkit {

namespace {

template <typename T>
T field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return field<T>(j, key, T{});
}

Json gating_to_json(const GatingPolicy& g) {
  switch (g.kind) {
    case GatingPolicy::Kind::always_on: return {{"kind", "always_on"}};
    case GatingPolicy::Kind::loss_threshold: return {{"kind", "loss_threshold"}, {"tau", g.tau}};
    case GatingPolicy::Kind::preassigned: return {{"kind", "preassigned"}, {"iterations", g.iters_per_model}};
  }
  throw ContractError("unknown gating kind");
}

GatingPolicy gating_from_json(const Json& j) {
  const auto kind = required<std::string>(j, "kind");
  if (kind == "always_on") return GatingPolicy::always_on();
  if (kind == "loss_threshold") return GatingPolicy::loss_threshold(field<double>(j, "tau", 0.01));
  if (kind == "preassigned") return GatingPolicy::preassigned(required<std::vector<std::size_t>>(j, "iterations"));
  throw ConfigError("unknown gating kind '" + kind + "'");
}

Json cw_to_json(const CWConfig& c) {
  return {{"kappa", c.kappa},           {"c_init", c.c_init},     {"c_min", c.c_min},
          {"c_max", c.c_max},           {"search_steps", c.c_search_steps}, {"inner_steps", c.inner_steps},
          {"step_size", c.step_size},   {"beta1", c.beta1},       {"beta2", c.beta2}};
}

CWConfig cw_from_json(const Json& j) {
  CWConfig c;
  c.kappa = field(j, "kappa", c.kappa);
  c.c_init = field(j, "c_init", c.c_init);
  c.c_min = field(j, "c_min", c.c_min);
  c.c_max = field(j, "c_max", c.c_max);
  c.c_search_steps = field(j, "search_steps", c.c_search_steps);
  c.inner_steps = field(j, "inner_steps", c.inner_steps);
  c.step_size = field(j, "step_size", c.step_size);
  c.beta1 = field(j, "beta1", c.beta1);
  c.beta2 = field(j, "beta2", c.beta2);
  return c;
}

std::string_view target_rule_name(TargetRule::Kind k) {
  switch (k) {
    case TargetRule::Kind::random_nontrue: return "random_nontrue";
    case TargetRule::Kind::fixed: return "fixed";
    case TargetRule::Kind::least_likely: return "least_likely";
  }
  throw ContractError("unknown target rule");
}

std::string report_text(const Json& doc) { return to_json_text(doc, 2) + "\n"; }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string_view goal_mode_name(GoalMode goal) { return goal == GoalMode::targeted ? "targeted" : "untargeted"; }

Json attack_spec_to_json(const AttackSpec& a) {
  Json j{{"kind", attack_kind_name(a.kind)},
         {"epsilon", a.config.epsilon},
         {"alpha", a.config.alpha},
         {"iterations", a.config.iterations}};
  if (a.kind == AttackKind::ensemble) j["gating"] = gating_to_json(a.gating);
  if (a.kind == AttackKind::cw) j["cw"] = cw_to_json(a.cw);
  return j;
}

AttackSpec attack_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("method section must be an object");
  AttackSpec a;
  a.kind = parse_attack_kind(required<std::string>(j, "kind"));
  a.config.epsilon = field(j, "epsilon", a.config.epsilon);
  a.config.alpha = field(j, "alpha", a.config.alpha);
  a.config.iterations = field(j, "iterations", a.config.iterations);
  if (j.contains("gating")) a.gating = gating_from_json(j.at("gating"));
  if (j.contains("cw")) a.cw = cw_from_json(j.at("cw"));
  return a;
}

Json selection_to_json(const ImageSelection& images, GoalMode goal, const TargetRule& target) {
  Json t{{"rule", target_rule_name(target.kind)}};
  if (target.kind == TargetRule::Kind::fixed) t["class"] = target.fixed_class;
  return {{"images", {{"count", images.count}, {"seed", images.seed}, {"split", split_name(images.split)}}},
          {"goal", goal_mode_name(goal)},
          {"target", t}};
}

void selection_from_json(const Json& j, ImageSelection& images, GoalMode& goal, TargetRule& target) {
  if (j.contains("images")) {
    const Json& im = j.at("images");
    images.count = field(im, "count", images.count);
    images.seed = field(im, "seed", images.seed);
    if (im.contains("split")) images.split = parse_split(field<std::string>(im, "split", ""));
  }
  const auto g = field<std::string>(j, "goal", "targeted");
  if (g == "targeted") {
    goal = GoalMode::targeted;
  } else if (g == "untargeted") {
    goal = GoalMode::untargeted;
  } else {
    throw ConfigError("unknown goal '" + g + "'");
  }
  if (j.contains("target")) {
    const Json& t = j.at("target");
    const auto rule = required<std::string>(t, "rule");
    if (rule == "random_nontrue") {
      target.kind = TargetRule::Kind::random_nontrue;
    } else if (rule == "least_likely") {
      target.kind = TargetRule::Kind::least_likely;
    } else if (rule == "fixed") {
      target.kind = TargetRule::Kind::fixed;
      target.fixed_class = required<std::size_t>(t, "class");
    } else {
      throw ConfigError("unknown target rule '" + rule + "'");
    }
  }
}

Json eval_spec_to_json(const EvalSpec& spec) {
  Json j = selection_to_json(spec.images, spec.goal, spec.target);
  j["method"] = attack_spec_to_json(spec.attack);
  j["sources"] = spec.sources;
  j["victims"] = spec.victims;
  return j;
}

EvalSpec eval_spec_from_json(const Json& j) {
  EvalSpec spec;
  spec.attack = attack_spec_from_json(required<Json>(j, "method"));
  spec.sources = required<std::vector<std::vector<std::string>>>(j, "sources");
  spec.victims = required<std::vector<std::string>>(j, "victims");
  selection_from_json(j, spec.images, spec.goal, spec.target);
  return spec;
}

Json sweep_spec_to_json(const SweepSpec& spec) {
  Json j = selection_to_json(spec.images, spec.goal, spec.target);
  j["method"] = attack_spec_to_json(spec.attack);
  j["members"] = spec.members;
  j["grid"] = spec.grid;
  return j;
}

SweepSpec sweep_spec_from_json(const Json& j) {
  SweepSpec spec;
  spec.attack = attack_spec_from_json(required<Json>(j, "method"));
  spec.members = required<std::vector<std::string>>(j, "members");
  spec.grid = required<std::vector<std::size_t>>(j, "grid");
  selection_from_json(j, spec.images, spec.goal, spec.target);
  return spec;
}

ZooHashes zoo_hashes(const Zoo& zoo) {
  ZooHashes out;
  for (const auto& m : zoo.models()) out[m.name()] = model_hash(m);
  return out;
}

std::string transfer_csv(const TransferMatrix& matrix, const EvalSpec& spec) {
  std::ostringstream os;
  os << kTransferCsvHeader << "\n";
  const auto& c = spec.attack.config;
  for (const auto& cell : matrix.cells) {
    os << cell.source << ',' << cell.victim << ',' << goal_mode_name(spec.goal) << ',' << format_double(c.epsilon)
       << ',' << format_double(c.alpha) << ',' << c.iterations << ',' << cell.n_images() << ',' << cell.n_success()
       << ',' << format_double(cell.rate()) << "\n";
  }
  return os.str();
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << kSweepCsvHeader << "\n";
  for (const auto& curve : result.curves) {
    for (std::size_t g = 0; g < result.spec.grid.size(); ++g) {
      const double rate = static_cast<double>(curve.n_success[g]) / static_cast<double>(result.n_images);
      os << curve.model << ',' << result.spec.grid[g] << ',' << result.n_images << ',' << curve.n_success[g] << ','
         << format_double(rate) << "\n";
    }
  }
  return os.str();
}

std::string transfer_json(const TransferMatrix& matrix, const EvalSpec& spec, const ZooHashes& hashes) {
  Json images = Json::array();
  for (const auto& img : matrix.images) {
    Json e{{"index", img.index}, {"true_class", img.true_class}};
    if (img.goal.is_targeted()) e["target"] = img.goal.reference_class();
    images.push_back(e);
  }
  Json results = Json::array();
  for (const auto& cell : matrix.cells) {
    std::vector<int> outcomes(cell.outcomes.begin(), cell.outcomes.end());
    results.push_back({{"source", cell.source},
                       {"victim", cell.victim},
                       {"white_box", cell.white_box},
                       {"n_images", cell.n_images()},
                       {"n_success", cell.n_success()},
                       {"rate", cell.rate()},
                       {"outcomes", outcomes}});
  }
  const Json doc{{"spec", eval_spec_to_json(spec)},
                 {"zoo_hashes", hashes},
                 {"images", images},
                 {"results", results},
                 {"created_with", kReportFormatVersion}};
  return report_text(doc);
}

std::string sweep_json(const SweepResult& result, const ZooHashes& hashes) {
  Json results = Json::array();
  for (const auto& curve : result.curves) {
    std::vector<double> rates;
    for (std::size_t s : curve.n_success) rates.push_back(static_cast<double>(s) / static_cast<double>(result.n_images));
    results.push_back({{"model", curve.model},
                       {"iterations", result.spec.grid},
                       {"n_images", result.n_images},
                       {"n_success", curve.n_success},
                       {"rate", rates},
                       {"monotone_fraction", curve.monotone_fraction}});
  }
  const Json doc{{"spec", sweep_spec_to_json(result.spec)},
                 {"zoo_hashes", hashes},
                 {"results", results},
                 {"created_with", kReportFormatVersion}};
  return report_text(doc);
}

const std::string& CsvRow::at(const std::string& column) const {
  const auto it = fields.find(column);
  if (it == fields.end()) throw DataError("CSV row has no column '" + column + "'");
  return it->second;
}

std::vector<CsvRow> parse_csv(const std::string& text, std::string_view header) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != header) throw DataError("CSV header does not match '" + std::string(header) + "'");
  const auto columns = split_line(line);
  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto values = split_line(line);
    if (values.size() != columns.size()) throw DataError("CSV row has " + std::to_string(values.size()) + " fields");
    CsvRow row;
    for (std::size_t i = 0; i < columns.size(); ++i) row.fields[columns[i]] = values[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit_report(const TransferMatrix& matrix, const EvalSpec& spec, const ZooHashes& hashes,
                 const std::filesystem::path& stem) {
  write_file_atomic(std::filesystem::path(stem.string() + ".csv"), transfer_csv(matrix, spec));
  write_file_atomic(std::filesystem::path(stem.string() + ".json"), transfer_json(matrix, spec, hashes));
}

void emit_report(const SweepResult& result, const ZooHashes& hashes, const std::filesystem::path& stem) {
  write_file_atomic(std::filesystem::path(stem.string() + ".csv"), sweep_csv(result));
  write_file_atomic(std::filesystem::path(stem.string() + ".json"), sweep_json(result, hashes));
}

}  // namespace advkit
