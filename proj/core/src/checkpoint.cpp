#include "json_codec.hpp"
#include "mdreg/serialize.hpp"

#include <fstream>
#include <sstream>

namespace mdreg::io {

using detail::Json;

namespace detail {

Json hyperparams_json(const HyperParams& p) {
  Json j;
  j["diffusion_alpha"] = p.diffusion_alpha;
  j["diffusion_gamma"] = p.diffusion_gamma;
  j["knn_k"] = p.knn_k ? Json(*p.knn_k) : Json(nullptr);
  j["k_v"] = p.k_v ? Json(*p.k_v) : Json(nullptr);
  j["gol_margin"] = p.gol_margin;
  j["loss_weights"] = Json::array({p.loss_weights.order, p.loss_weights.metric, p.loss_weights.center});
  j["metric_form"] = p.metric_form == MetricForm::kSignedHinge ? "signed_hinge" : "absolute";
  return j;
}

HyperParams hyperparams_from(const Json& j) {
  constexpr std::string_view what = "params";
  check_keys(j, what, {"diffusion_alpha", "diffusion_gamma", "knn_k", "k_v", "gol_margin", "loss_weights",
                       "metric_form"});
  HyperParams p;
  read_field(j, "diffusion_alpha", p.diffusion_alpha, what);
  read_field(j, "diffusion_gamma", p.diffusion_gamma, what);
  int k = 0;
  if (j.contains("knn_k") && !j["knn_k"].is_null()) {
    read_field(j, "knn_k", k, what);
    p.knn_k = k;
  }
  if (j.contains("k_v") && !j["k_v"].is_null()) {
    read_field(j, "k_v", k, what);
    p.k_v = k;
  }
  read_field(j, "gol_margin", p.gol_margin, what);
  if (j.contains("loss_weights")) {
    const auto& w = j["loss_weights"];
    if (!w.is_array() || w.size() != 3 || !w[0].is_number() || !w[1].is_number() || !w[2].is_number())
      throw ParameterError("params: loss_weights must be [order, metric, center]");
    p.loss_weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>()};
  }
  if (j.contains("metric_form")) {
    std::string form;
    read_field(j, "metric_form", form, what);
    if (form == "signed_hinge") {
      p.metric_form = MetricForm::kSignedHinge;
    } else if (form == "absolute") {
      p.metric_form = MetricForm::kAbsoluteAsWritten;
    } else {
      throw ParameterError("params: metric_form must be 'signed_hinge' or 'absolute'");
    }
  }
  p.validate();
  return p;
}

}  // namespace detail

namespace {

void require_finite(const RowMatrix& m, const char* what) {
  if (!m.allFinite()) throw ParameterError(std::string(what) + " has non-finite entries");
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string checkpoint_to_json(const Checkpoint& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  if (c.gol) {
    require_finite(c.gol->embedder.weight, "embedder weight");
    require_finite(c.gol->refs.points, "reference points");
    j["weight"] = detail::matrix_to_json(c.gol->embedder.weight);
    j["bias"] = detail::vector_to_json(c.gol->embedder.bias);
    j["reference_points"] = detail::matrix_to_json(c.gol->refs.points);
    j["groups"] = {{"lower", c.gol->groups.lower()}, {"upper", c.gol->groups.upper()}, {"count", c.gol->groups.count()}};
  }
  if (c.head) {
    j["head"] = {{"weight", detail::vector_to_json(c.head->weight)},
                 {"bias", c.head->bias},
                 {"ridge_lambda", c.head->ridge_lambda}};
  }
  j["params"] = detail::hyperparams_json(c.params);
  j["seed"] = c.seed;
  j["step"] = c.step;
  return j.dump(2) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  const Json j = detail::parse_json(text, "checkpoint");
  detail::check_keys(j, "checkpoint",
                     {"schema_version", "weight", "bias", "reference_points", "groups", "params", "seed", "step",
                      "head"});
  int version = 0;
  detail::read_field(j, "schema_version", version, "checkpoint");
  if (version != kSchemaVersion)
    throw ParameterError("checkpoint: unsupported schema_version " + std::to_string(version));

  Checkpoint c;
  if (j.contains("params")) c.params = detail::hyperparams_from(j["params"]);
  detail::read_field(j, "seed", c.seed, "checkpoint");
  detail::read_field(j, "step", c.step, "checkpoint");

  const bool has_gol = j.contains("weight") || j.contains("bias") || j.contains("reference_points");
  if (has_gol) {
    if (!j.contains("weight") || !j.contains("bias") || !j.contains("reference_points") || !j.contains("groups"))
      throw ParameterError("checkpoint: weight, bias, reference_points and groups must appear together");
    gol::LinearEmbedder e;
    e.weight = detail::matrix_from_json(j["weight"], "weight");
    e.bias = detail::vector_from_json(j["bias"], "bias");
    if (e.bias.size() != e.weight.rows()) throw ParameterError("checkpoint: bias length must equal weight rows");
    ReferencePoints refs{detail::matrix_from_json(j["reference_points"], "reference_points")};
    if (refs.points.cols() != e.weight.rows())
      throw ParameterError("checkpoint: reference_points width must equal embedding dimension");
    const auto& g = j["groups"];
    detail::check_keys(g, "groups", {"lower", "upper", "count"});
    double lower = 0.0, upper = 0.0;
    int count = 0;
    detail::read_field(g, "lower", lower, "groups");
    detail::read_field(g, "upper", upper, "groups");
    detail::read_field(g, "count", count, "groups");
    ValueGroups groups(lower, upper, count);
    if (refs.count() != groups.count()) throw ParameterError("checkpoint: one reference point per group required");
    c.gol = eval::GolModel{std::move(e), std::move(refs), groups};
  }
  if (j.contains("head")) {
    const auto& h = j["head"];
    detail::check_keys(h, "head", {"weight", "bias", "ridge_lambda"});
    baselines::LinearHead head;
    head.weight = detail::vector_from_json(h.at("weight"), "head.weight");
    detail::read_field(h, "bias", head.bias, "head");
    detail::read_field(h, "ridge_lambda", head.ridge_lambda, "head");
    c.head = std::move(head);
  }
  return c;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

HyperParams parse_hyperparams(std::string_view json) {
  return detail::hyperparams_from(detail::parse_json(json, "params"));
}

std::string hyperparams_to_json(const HyperParams& params) { return detail::hyperparams_json(params).dump(); }

}  // namespace mdreg::io
