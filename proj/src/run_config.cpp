#include "advkit/run_config.hpp"

#include "advkit/error.hpp"
#include "advkit/io.hpp"
#include "advkit/report.hpp"
#include "advkit/schema.hpp"

namespace advkit {

namespace detail {
extern const char* const kRunConfigSchemaText;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

DatasetConfig parse_dataset(const Json& j, const std::filesystem::path& base, std::uint64_t seed) {
  DatasetConfig d;
  SyntheticParams& s = d.synthetic;
  s.seed = seed;
  if (j.is_null()) return d;
  d.source = j.value("source", std::string("synthetic")) == "idx" ? DatasetConfig::Source::idx
                                                                   : DatasetConfig::Source::synthetic;
  s.num_classes = j.value("num_classes", s.num_classes);
  if (j.contains("shape")) s.image_shape = j.at("shape").get<Shape>();
  s.train_count = j.value("train_count", s.train_count);
  s.test_count = j.value("test_count", s.test_count);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.prototype_low = j.value("prototype_low", s.prototype_low);
  s.prototype_high = j.value("prototype_high", s.prototype_high);
  s.class_contrast = j.value("class_contrast", s.class_contrast);
  if (d.source == DatasetConfig::Source::idx) {
    if (!j.contains("idx")) throw ConfigError("dataset source 'idx' needs an 'idx' section with file paths");
    const Json& idx = j.at("idx");
    d.train_images = resolve(base, idx.at("train_images").get<std::string>());
    d.train_labels = resolve(base, idx.at("train_labels").get<std::string>());
    d.test_images = resolve(base, idx.at("test_images").get<std::string>());
    d.test_labels = resolve(base, idx.at("test_labels").get<std::string>());
  } else if (j.contains("idx")) {
    throw ConfigError("dataset 'idx' paths are only valid with source 'idx'");
  }
  return d;
}

ZooTrainOptions parse_zoo(const Json& j, std::uint64_t seed) {
  ZooTrainOptions z;
  z.seed = seed;
  if (j.is_null()) return z;
  if (j.contains("models")) z.names = j.at("models").get<std::vector<std::string>>();
  z.hyper.learning_rate = j.value("learning_rate", z.hyper.learning_rate);
  z.hyper.epochs = j.value("epochs", z.hyper.epochs);
  z.hyper.batch_size = j.value("batch_size", z.hyper.batch_size);
  z.hyper.epsilon_warmup_epochs = j.value("epsilon_warmup_epochs", z.hyper.epsilon_warmup_epochs);
  z.epsilon_train = j.value("epsilon_train", z.epsilon_train);
  return z;
}

// Image seeds default to the global seed unless the section pins one.
void selection_with_seed(const Json& j, std::uint64_t seed, ImageSelection& images, GoalMode& goal,
                         TargetRule& target) {
  images.seed = seed;
  selection_from_json(j, images, goal, target);
}

}  // namespace

const Json& run_config_schema() {
  static const Json schema = parse_json_text(detail::kRunConfigSchemaText, "embedded run config schema");
  return schema;
}

RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir, const ConfigOverrides& overrides) {
  require_schema(run_config_schema(), doc, "run config");
  RunConfig cfg;
  cfg.global_seed = overrides.seed ? *overrides.seed : doc.value("global_seed", std::uint64_t{0});
  if (overrides.output_dir) {
    cfg.output_dir = *overrides.output_dir;
  } else {
    cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("advkit_out")));
  }
  cfg.dataset = parse_dataset(doc.value("dataset", Json()), base_dir, cfg.global_seed);
  cfg.zoo = parse_zoo(doc.value("zoo", Json()), cfg.global_seed);

  if (doc.contains("attack")) {
    const Json& j = doc.at("attack");
    AttackRunSpec a;
    a.attack = attack_spec_from_json(j.at("method"));
    a.members = j.at("members").get<std::vector<std::string>>();
    selection_with_seed(j, cfg.global_seed, a.images, a.goal, a.target);
    cfg.attack = std::move(a);
  }
  if (doc.contains("eval")) {
    const Json& j = doc.at("eval");
    EvalSection e;
    e.use_archive = j.value("use_archive", false);
    e.spec.victims = j.at("victims").get<std::vector<std::string>>();
    if (!e.use_archive) {
      if (!j.contains("method") || !j.contains("sources")) {
        throw ConfigError("eval needs 'method' and 'sources' unless use_archive is set");
      }
      e.spec.attack = attack_spec_from_json(j.at("method"));
      e.spec.sources = j.at("sources").get<std::vector<std::vector<std::string>>>();
    }
    selection_with_seed(j, cfg.global_seed, e.spec.images, e.spec.goal, e.spec.target);
    cfg.eval = std::move(e);
  }
  if (doc.contains("sweep")) {
    const Json& j = doc.at("sweep");
    SweepSpec s;
    s.attack = attack_spec_from_json(j.at("method"));
    s.members = j.at("members").get<std::vector<std::string>>();
    s.grid = j.at("grid").get<std::vector<std::size_t>>();
    selection_with_seed(j, cfg.global_seed, s.images, s.goal, s.target);
    cfg.sweep = std::move(s);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  Json doc;
  try {
    doc = parse_json_text(text, path.string());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(doc, path.parent_path(), overrides);
}

}  // namespace advkit
