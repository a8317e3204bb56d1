#include "advkit/model_io.hpp"

#include "advkit/error.hpp"
#include "advkit/io.hpp"

namespace advkit {

namespace {

std::string kind_name(TrainingKind k) {
  return k == TrainingKind::adversarial ? "adversarial" : "standard";
}

TrainingKind parse_kind(const std::string& s) {
  if (s == "standard") return TrainingKind::standard;
  if (s == "adversarial") return TrainingKind::adversarial;
  throw DataError("unknown training_kind '" + s + "'");
}

}  // namespace

Json spec_to_json(const ModelSpec& spec) {
  Json layers = Json::array();
  for (const auto& layer : spec.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      layers.push_back({{"type", "dense"}, {"n_in", d->n_in}, {"n_out", d->n_out}});
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      layers.push_back({{"type", "conv2d"}, {"channels", c->channels}, {"filters", c->filters}, {"kernel", c->kernel}});
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      layers.push_back({{"type", "relu"}});
    } else {
      layers.push_back({{"type", "flatten"}});
    }
  }
  return {{"layers", layers}, {"input_shape", spec.input_shape}, {"num_classes", spec.num_classes}};
}

ModelSpec spec_from_json(const Json& j) {
  ModelSpec spec;
  spec.input_shape = j.at("input_shape").get<Shape>();
  spec.num_classes = j.at("num_classes").get<std::size_t>();
  for (const auto& l : j.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    if (type == "dense") {
      spec.layers.push_back(DenseLayer{l.at("n_in").get<std::size_t>(), l.at("n_out").get<std::size_t>()});
    } else if (type == "conv2d") {
      spec.layers.push_back(Conv2dLayer{l.at("channels").get<std::size_t>(), l.at("filters").get<std::size_t>(),
                                        l.at("kernel").get<std::size_t>()});
    } else if (type == "relu") {
      spec.layers.push_back(ReluLayer{});
    } else if (type == "flatten") {
      spec.layers.push_back(FlattenLayer{});
    } else {
      throw DataError("unknown layer type '" + type + "'");
    }
  }
  return spec;
}

std::string serialize_model(const TrainedModel& model) {
  model.validate();
  Json params = Json::array();
  for (const auto& p : model.params) {
    params.push_back({{"shape", p.shape()}, {"values", std::vector<double>(p.values().begin(), p.values().end())}});
  }
  const auto& m = model.meta;
  Json meta = {
      {"name", m.name},
      {"training_kind", kind_name(m.training_kind)},
      {"epsilon_train", m.epsilon_train},
      {"seed", m.seed},
      {"epochs", m.epochs},
      {"final_train_loss", m.final_train_loss},
      {"dataset_id", m.dataset_id},
  };
  Json doc = {
      {"format_version", kModelFormatVersion},
      {"spec", spec_to_json(model.spec)},
      {"meta", meta},
      {"params", params},
  };
  return to_json_text(doc) + "\n";
}

TrainedModel deserialize_model(const std::string& text, const std::string& origin) {
  const Json doc = parse_json_text(text, origin);
  TrainedModel model;
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError(origin + " has format_version " + std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));
    }
    model.spec = spec_from_json(doc.at("spec"));
    const Json& m = doc.at("meta");
    model.meta.name = m.at("name").get<std::string>();
    model.meta.training_kind = parse_kind(m.at("training_kind").get<std::string>());
    model.meta.epsilon_train = m.at("epsilon_train").get<double>();
    model.meta.seed = m.at("seed").get<std::uint64_t>();
    model.meta.epochs = m.at("epochs").get<std::size_t>();
    model.meta.final_train_loss = m.at("final_train_loss").get<double>();
    model.meta.dataset_id = m.at("dataset_id").get<std::string>();
    for (const auto& p : doc.at("params")) {
      model.params.emplace_back(p.at("shape").get<Shape>(), p.at("values").get<std::vector<double>>());
    }
  } catch (const Json::exception& e) {
    throw DataError(origin + " is malformed: " + e.what());
  } catch (const DimensionError& e) {
    throw DataError(origin + " has inconsistent shapes: " + e.what());
  }
  try {
    model.validate();
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(origin + " failed validation: " + e.what());
  }
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path), "model file '" + path.string() + "'");
}

std::string model_hash(const TrainedModel& model) {
  return sha256_hex(serialize_model(model));
}

}  // namespace advkit
