#include "advkit/commands.hpp"

#include <algorithm>
#include <ostream>

#include "advkit/error.hpp"
#include "advkit/io.hpp"
#include "advkit/model_io.hpp"
#include "advkit/report.hpp"

namespace advkit {

namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;

void refuse_overwrite(const std::vector<fs::path>& outputs, const CommandOptions& options) {
  if (options.force) return;
  for (const auto& p : outputs) {
    if (fs::exists(p)) throw ConfigError("refusing to overwrite " + p.string() + " (pass --force)");
  }
}

std::vector<fs::path> dataset_files(const fs::path& header, const std::vector<Split>& splits) {
  std::vector<fs::path> out{header};
  for (Split s : splits) {
    out.push_back(blob_path(header, s, "images"));
    out.push_back(blob_path(header, s, "labels"));
  }
  return out;
}

DatasetBundle load_dataset(const OutputLayout& layout) {
  const fs::path header = layout.dataset_header();
  if (!fs::exists(header)) {
    throw DataError("dataset not found at " + header.string() + " (run gen-data first)");
  }
  return read_dataset(header);
}

std::string text_for(const Json& doc) { return to_json_text(doc, 2) + "\n"; }

Json load_json_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw DataError(what + " not found at " + path.string());
  return parse_json_text(read_file(path), path.string());
}

void check_dataset_split(const DatasetBundle& bundle, Split split) {
  for (const auto& d : bundle.splits) {
    if (d.split == split) return;
  }
  throw ConfigError("dataset has no '" + std::string(split_name(split)) + "' split");
}

}  // namespace

void cmd_gen_data(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  const OutputLayout layout{config.output_dir};
  refuse_overwrite(dataset_files(layout.dataset_header(), {Split::train, Split::test}), options);

  DatasetBundle bundle;
  if (config.dataset.source == DatasetConfig::Source::synthetic) {
    bundle = make_synthetic(config.dataset.synthetic);
  } else {
    const DatasetConfig& d = config.dataset;
    const std::size_t K = d.synthetic.num_classes;
    bundle.splits.push_back(read_idx(d.train_images, d.train_labels, Split::train, K));
    bundle.splits.push_back(read_idx(d.test_images, d.test_labels, Split::test, K));
    bundle.num_classes = K;
    bundle.image_shape = bundle.splits[0].image_shape();
    if (bundle.splits[1].image_shape() != bundle.image_shape) {
      throw DataError("IDX train and test images differ in shape");
    }
    bundle.seed = config.global_seed;
    bundle.dataset_id = compute_dataset_id(bundle);
    for (auto& s : bundle.splits) s.dataset_id = bundle.dataset_id;
  }
  write_dataset(layout.dataset_header(), bundle);
  out << "dataset_id " << bundle.dataset_id << "\n";
}

void cmd_train(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  const OutputLayout layout{config.output_dir};
  const DatasetBundle bundle = load_dataset(layout);
  const Dataset& train_set = bundle.split(Split::train);
  const Dataset& test_set = bundle.split(Split::test);

  const auto entries = default_zoo(bundle.image_shape, bundle.num_classes);
  std::vector<std::string> names = config.zoo.names.empty() ? default_zoo_names() : config.zoo.names;
  std::vector<fs::path> outputs{layout.manifest()};
  for (const auto& n : names) outputs.push_back(layout.model_file(n));
  refuse_overwrite(outputs, options);

  Json models = Json::object();
  for (const auto& entry : entries) {
    if (std::find(names.begin(), names.end(), entry.name) == names.end()) continue;
    const TrainedModel model = train_zoo_entry(entry, train_set, config.zoo);
    save_model(model, layout.model_file(entry.name));
    const double acc = accuracy(model, test_set);
    models[entry.name] = {{"file", entry.name + ".json"},
                          {"hash", model_hash(model)},
                          {"test_accuracy", acc},
                          {"training_kind", model.meta.training_kind == TrainingKind::adversarial ? "adversarial"
                                                                                                  : "standard"},
                          {"epsilon_train", model.meta.epsilon_train},
                          {"holdout", entry.holdout}};
    out << entry.name << " test_accuracy " << format_double(acc) << "\n";
  }
  const Json manifest{{"dataset_id", bundle.dataset_id}, {"models", models}, {"created_with", kManifestVersion}};
  write_file_atomic(layout.manifest(), text_for(manifest));
}

Zoo load_trained_zoo(const OutputLayout& layout, const std::string& dataset_id) {
  const Json manifest = load_json_file(layout.manifest(), "zoo manifest (run train first)");
  if (manifest.value("dataset_id", std::string()) != dataset_id) {
    throw DataError("zoo manifest was trained on a different dataset than " + layout.dataset_header().string());
  }
  std::vector<TrainedModel> models;
  for (const auto& [name, entry] : manifest.at("models").items()) {
    TrainedModel m = load_model(layout.models_dir() / entry.at("file").get<std::string>());
    if (model_hash(m) != entry.at("hash").get<std::string>()) {
      throw DataError("model file for '" + name + "' does not match the hash in the manifest");
    }
    if (m.meta.dataset_id != dataset_id) throw DataError("model '" + name + "' was trained on a different dataset");
    models.push_back(std::move(m));
  }
  return Zoo(std::move(models));
}

void cmd_attack(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  if (!config.attack) throw ConfigError("config has no 'attack' section");
  const AttackRunSpec& spec = *config.attack;
  const OutputLayout layout{config.output_dir};
  refuse_overwrite(dataset_files(layout.archive_header(), {Split::adversarial}), options);
  refuse_overwrite({layout.attack_summary()}, options);

  const DatasetBundle bundle = load_dataset(layout);
  check_dataset_split(bundle, spec.images.split);
  const Dataset& data = bundle.split(spec.images.split);
  const Zoo zoo = load_trained_zoo(layout, bundle.dataset_id);

  // Validation mirrors a one-row evaluation against the members themselves.
  EvalSpec as_eval{spec.attack, {spec.members}, spec.members, spec.images, spec.goal, spec.target};
  as_eval.validate(zoo);
  const Ensemble source = zoo.members(spec.members);
  const auto images = select_images(source, data, spec.images, spec.goal, spec.target);

  std::vector<Tensor> adversarial;
  std::vector<std::size_t> labels;
  Json per_image = Json::array();
  std::vector<std::size_t> successes(source.size(), 0);
  double max_linf = 0.0, max_l2 = 0.0;
  for (const auto& img : images) {
    const Tensor x = data.image(img.index);
    AttackOutcome outcome = run_attack(source, x, img.goal, spec.attack);
    check_adversarial(outcome.x_adv, x, spec.attack, source, img.goal, outcome.cw_succeeded);
    const double linf = linf_distance(outcome.x_adv, x), l2 = l2_distance(outcome.x_adv, x);
    max_linf = std::max(max_linf, linf);
    max_l2 = std::max(max_l2, l2);
    std::vector<int> success;
    for (std::size_t k = 0; k < source.size(); ++k) {
      const bool ok = img.goal.achieved_by(predict(*source[k], outcome.x_adv));
      success.push_back(ok);
      successes[k] += ok;
    }
    Json rec{{"index", img.index}, {"true_class", img.true_class}, {"linf", linf}, {"l2", l2},
             {"success", success}, {"steps", outcome.steps.size()}};
    if (img.goal.is_targeted()) rec["target"] = img.goal.reference_class();
    if (!outcome.steps.empty()) rec["final_losses"] = outcome.steps.back().losses;
    per_image.push_back(rec);
    adversarial.push_back(std::move(outcome.x_adv));
    labels.push_back(img.true_class);
  }

  // Independent audit over the stored images.
  std::size_t domain_violations = 0, ball_violations = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (double v : adversarial[i].values()) domain_violations += !(v >= 0.0 && v <= 1.0);
    if (spec.attack.kind != AttackKind::cw) {
      ball_violations += !(linf_distance(adversarial[i], data.image(images[i].index)) <= spec.attack.config.epsilon + 1e-12);
    }
  }
  if (domain_violations != 0 || ball_violations != 0) {
    throw InvariantViolation("audit found " + std::to_string(domain_violations) + " domain and " +
                             std::to_string(ball_violations) + " l-infinity violations");
  }

  DatasetBundle archive;
  archive.num_classes = bundle.num_classes;
  archive.image_shape = bundle.image_shape;
  archive.seed = spec.images.seed;
  archive.splits.push_back(make_dataset(adversarial, labels, bundle.num_classes, Split::adversarial));
  archive.dataset_id = compute_dataset_id(archive);
  archive.splits[0].dataset_id = archive.dataset_id;
  write_dataset(layout.archive_header(), archive);

  Json rates = Json::array();
  for (std::size_t k = 0; k < source.size(); ++k) {
    rates.push_back({{"model", spec.members[k]},
                     {"n_images", images.size()},
                     {"n_success", successes[k]},
                     {"rate", static_cast<double>(successes[k]) / static_cast<double>(images.size())}});
  }
  Json audit{{"n_images", images.size()}, {"max_linf", max_linf}, {"max_l2", max_l2},
             {"domain_violations", domain_violations}, {"linf_violations", ball_violations}};
  if (spec.attack.kind != AttackKind::cw) audit["epsilon"] = spec.attack.config.epsilon;
  Json summary = selection_to_json(spec.images, spec.goal, spec.target);
  summary["method"] = attack_spec_to_json(spec.attack);
  summary["members"] = spec.members;
  summary["dataset_id"] = bundle.dataset_id;
  summary["archive_id"] = archive.dataset_id;
  summary["zoo_hashes"] = zoo_hashes(zoo);
  summary["per_image"] = per_image;
  summary["rates"] = rates;
  summary["audit"] = audit;
  summary["created_with"] = kReportFormatVersion;
  write_file_atomic(layout.attack_summary(), text_for(summary));

  out << "attack " << attack_kind_name(spec.attack.kind) << " on " << source_label(spec.members) << ": "
      << images.size() << " images, max_linf " << format_double(max_linf) << "\n";
  for (const auto& r : rates) {
    out << "  " << r.at("model").get<std::string>() << " " << r.at("n_success").get<std::size_t>() << "/"
        << images.size() << "\n";
  }
}

namespace {

TransferMatrix replay_archive(const OutputLayout& layout, const DatasetBundle& bundle, const Zoo& zoo,
                              EvalSpec& spec) {
  const Json summary = load_json_file(layout.attack_summary(), "attack summary (run attack first)");
  const DatasetBundle archive = read_dataset(layout.archive_header());
  if (archive.dataset_id != summary.at("archive_id").get<std::string>()) {
    throw DataError("adversarial archive does not match the attack summary");
  }
  if (summary.at("dataset_id").get<std::string>() != bundle.dataset_id) {
    throw DataError("adversarial archive was produced from a different dataset");
  }
  const std::vector<std::string> members = summary.at("members").get<std::vector<std::string>>();
  spec.attack = attack_spec_from_json(summary.at("method"));
  spec.sources = {members};
  selection_from_json(summary, spec.images, spec.goal, spec.target);
  for (const auto& v : spec.victims) {
    if (!zoo.contains(v)) throw ConfigError("victim model '" + v + "' is not in the zoo");
  }

  const Dataset& clean = bundle.split(spec.images.split);
  const Dataset& adv = archive.split(Split::adversarial);
  TransferMatrix matrix;
  matrix.sources = {source_label(members)};
  matrix.victims = spec.victims;
  std::vector<Tensor> images;
  for (const auto& rec : summary.at("per_image")) {
    SelectedImage img;
    img.index = rec.at("index").get<std::size_t>();
    img.true_class = rec.at("true_class").get<std::size_t>();
    img.goal = rec.contains("target") ? AttackGoal::targeted(rec.at("target").get<std::size_t>())
                                      : AttackGoal::untargeted(img.true_class);
    if (img.index >= clean.size()) throw DataError("archived image index is out of range");
    matrix.images.push_back(img);
  }
  if (matrix.images.size() != adv.size()) throw DataError("archive and summary disagree on the image count");
  for (std::size_t i = 0; i < adv.size(); ++i) images.push_back(adv.image(i));
  for (const auto& v : spec.victims) {
    matrix.cells.push_back(
        score_adversarial(matrix.sources[0], members, zoo.at(v), clean, matrix.images, images, spec.attack));
  }
  return matrix;
}

}  // namespace

void cmd_eval(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  if (!config.eval) throw ConfigError("config has no 'eval' section");
  const OutputLayout layout{config.output_dir};
  const fs::path stem = layout.eval_stem();
  refuse_overwrite({stem.string() + ".csv", stem.string() + ".json"}, options);

  const DatasetBundle bundle = load_dataset(layout);
  const Zoo zoo = load_trained_zoo(layout, bundle.dataset_id);
  EvalSpec spec = config.eval->spec;
  TransferMatrix matrix;
  if (config.eval->use_archive) {
    matrix = replay_archive(layout, bundle, zoo, spec);
  } else {
    check_dataset_split(bundle, spec.images.split);
    matrix = run_eval(zoo, bundle.split(spec.images.split), spec);
  }
  emit_report(matrix, spec, zoo_hashes(zoo), stem);
  for (const auto& cell : matrix.cells) {
    out << cell.source << " -> " << cell.victim << (cell.white_box ? " (white-box) " : " ") << cell.n_success() << "/"
        << cell.n_images() << "\n";
  }
}

void cmd_sweep(const RunConfig& config, const CommandOptions& options, std::ostream& out) {
  if (!config.sweep) throw ConfigError("config has no 'sweep' section");
  const OutputLayout layout{config.output_dir};
  const fs::path stem = layout.sweep_stem();
  refuse_overwrite({stem.string() + ".csv", stem.string() + ".json"}, options);

  const DatasetBundle bundle = load_dataset(layout);
  check_dataset_split(bundle, config.sweep->images.split);
  const Zoo zoo = load_trained_zoo(layout, bundle.dataset_id);
  const SweepResult result = iteration_sweep(zoo, bundle.split(config.sweep->images.split), *config.sweep);
  emit_report(result, zoo_hashes(zoo), stem);
  for (const auto& curve : result.curves) {
    out << curve.model;
    for (std::size_t g = 0; g < result.spec.grid.size(); ++g) {
      out << " " << result.spec.grid[g] << ":" << curve.n_success[g] << "/" << result.n_images;
    }
    out << "\n";
  }
}

}  // namespace advkit
