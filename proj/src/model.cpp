#include "daln/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "daln/errors.hpp"
#include "daln/kernels.hpp"
#include "json.hpp"

namespace daln {

namespace {

void validate_extractor(const FeatureExtractor& g) {
  if (g.layer_dims.size() < 2) {
    throw ValueError("extractor needs at least [d_in, d_out] layer dims");
  }
  for (int d : g.layer_dims) {
    if (d <= 0) throw ValueError("extractor layer dims must be positive");
  }
  const size_t layers = g.layer_dims.size() - 1;
  if (g.weights.size() != layers || g.biases.size() != layers) {
    throw ShapeError("extractor has " + std::to_string(g.weights.size()) +
                     " weight matrices for " + std::to_string(layers) +
                     " layers");
  }
  for (size_t i = 0; i < layers; ++i) {
    if (g.weights[i].rows() != g.layer_dims[i + 1] ||
        g.weights[i].cols() != g.layer_dims[i]) {
      throw ShapeError("extractor layer " + std::to_string(i) + " weight " +
                       g.weights[i].shape_str() + " does not chain " +
                       std::to_string(g.layer_dims[i]) + "->" +
                       std::to_string(g.layer_dims[i + 1]));
    }
    if (g.biases[i].rows() != 1 || g.biases[i].cols() != g.layer_dims[i + 1]) {
      throw ShapeError("extractor layer " + std::to_string(i) + " bias " +
                       g.biases[i].shape_str());
    }
  }
}

Matrix uniform_matrix(int rows, int cols, double bound, RngStream& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

BoundExtractor bind(ad::Tape& tape, const FeatureExtractor& g,
                    bool trainable) {
  validate_extractor(g);
  BoundExtractor bound;
  bound.activation = g.activation;
  for (size_t i = 0; i < g.weights.size(); ++i) {
    bound.weights.push_back(trainable ? tape.param(g.weights[i])
                                      : tape.input(g.weights[i]));
    bound.biases.push_back(trainable ? tape.param(g.biases[i])
                                     : tape.input(g.biases[i]));
  }
  return bound;
}

BoundClassifier bind(ad::Tape& tape, const Classifier& c, bool trainable) {
  if (c.bias.rows() != 1 || c.bias.cols() != c.weight.rows()) {
    throw ShapeError("classifier bias " + c.bias.shape_str() +
                     " does not match weight " + c.weight.shape_str());
  }
  BoundClassifier bound;
  bound.weight = trainable ? tape.param(c.weight) : tape.input(c.weight);
  bound.bias = trainable ? tape.param(c.bias) : tape.input(c.bias);
  return bound;
}

BoundModel bind(ad::Tape& tape, const Model& m, bool trainable) {
  return {bind(tape, m.extractor, trainable),
          bind(tape, m.classifier, trainable)};
}

void write_back(const BoundExtractor& bound, FeatureExtractor* g) {
  for (size_t i = 0; i < bound.weights.size(); ++i) {
    g->weights[i] = bound.weights[i]->value;
    g->biases[i] = bound.biases[i]->value;
  }
}

void write_back(const BoundClassifier& bound, Classifier* c) {
  c->weight = bound.weight->value;
  c->bias = bound.bias->value;
}

void write_back(const BoundModel& bound, Model* m) {
  write_back(bound.extractor, &m->extractor);
  write_back(bound.classifier, &m->classifier);
}

ad::Node* extract(ad::Tape& tape, const BoundExtractor& g, ad::Node* x) {
  if (x->value.cols() != g.weights.front()->value.cols()) {
    throw ShapeError("extract: input width " +
                     std::to_string(x->value.cols()) + " does not match d_in " +
                     std::to_string(g.weights.front()->value.cols()));
  }
  ad::Node* h = x;
  for (size_t i = 0; i < g.weights.size(); ++i) {
    h = tape.add_row_bias(tape.matmul(h, tape.transpose(g.weights[i])),
                          g.biases[i]);
    if (i + 1 < g.weights.size()) {
      h = g.activation == Activation::kTanh ? tape.tanh(h) : tape.relu(h);
    }
  }
  return h;
}

ad::Node* classify(ad::Tape& tape, const BoundClassifier& c, ad::Node* f) {
  if (f->value.cols() != c.weight->value.cols()) {
    throw ShapeError("classify: feature width " +
                     std::to_string(f->value.cols()) +
                     " does not match classifier d " +
                     std::to_string(c.weight->value.cols()));
  }
  return tape.softmax_rows(
      tape.add_row_bias(tape.matmul(f, tape.transpose(c.weight)), c.bias));
}

ad::Node* critic_score(ad::Tape& tape, const BoundClassifier& c, ad::Node* f,
                       CriticNorm norm) {
  ad::Node* z = classify(tape, c, f);
  ad::Node* n = norm == CriticNorm::kNuclear ? tape.nuclear_norm(z)
                                             : tape.frobenius_norm(z);
  return tape.scale(n, 1.0 / z->value.rows());
}

ad::Node* discriminate(ad::Tape& tape, const BoundExtractor& d, ad::Node* f) {
  if (d.weights.back()->value.rows() != 1) {
    throw ShapeError("discriminate: final layer must have one output");
  }
  return tape.sigmoid(extract(tape, d, f));
}

Matrix extract_values(const FeatureExtractor& g, const Matrix& x) {
  validate_extractor(g);
  if (x.cols() != g.in_dim()) {
    throw ShapeError("extract: input width " + std::to_string(x.cols()) +
                     " does not match d_in " + std::to_string(g.in_dim()));
  }
  Matrix h = x;
  for (size_t i = 0; i < g.weights.size(); ++i) {
    Matrix z = kernels::matmul(h, transpose(g.weights[i]));
    for (int r = 0; r < z.rows(); ++r)
      for (int c = 0; c < z.cols(); ++c) z(r, c) += g.biases[i](0, c);
    if (i + 1 < g.weights.size()) {
      h = g.activation == Activation::kTanh ? kernels::tanh_eltwise(z)
                                            : kernels::relu_eltwise(z);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Matrix classify_values(const Model& m, const Matrix& x) {
  Matrix f = extract_values(m.extractor, x);
  Matrix logits = kernels::matmul(f, transpose(m.classifier.weight));
  for (int r = 0; r < logits.rows(); ++r)
    for (int c = 0; c < logits.cols(); ++c)
      logits(r, c) += m.classifier.bias(0, c);
  return kernels::softmax_rows(logits);
}

FeatureExtractor make_extractor(const std::vector<int>& layer_dims,
                                Activation activation, RngStream& rng) {
  if (layer_dims.size() < 2) {
    throw ValueError("extractor needs at least [d_in, d_out] layer dims");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw ValueError("extractor layer dims must be positive");
  }
  FeatureExtractor g;
  g.layer_dims = layer_dims;
  g.activation = activation;
  for (size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const int fan_in = layer_dims[i];
    const int fan_out = layer_dims[i + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    g.weights.push_back(uniform_matrix(fan_out, fan_in, bound, rng));
    g.biases.push_back(Matrix(1, fan_out));
  }
  validate_extractor(g);
  return g;
}

Classifier make_classifier(int classes, int feature_dim, RngStream& rng) {
  if (classes < 2 || feature_dim < 1) {
    throw ValueError("classifier needs >= 2 classes and >= 1 feature");
  }
  const double bound = std::sqrt(6.0 / (classes + feature_dim));
  return {uniform_matrix(classes, feature_dim, bound, rng),
          Matrix(1, classes)};
}

namespace {

void emit_real(std::string* out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // decimal text with 17 significant digits parses back to identical bits
  *out += buf;
}

void emit_matrix(std::string* out, const Matrix& m) {
  *out += "{\"rows\":" + std::to_string(m.rows()) +
          ",\"cols\":" + std::to_string(m.cols()) + ",\"data\":[";
  for (int i = 0; i < m.size(); ++i) {
    if (i) *out += ',';
    emit_real(out, m.data()[i]);
  }
  *out += "]}";
}

Matrix parse_matrix(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  return Matrix(rows, cols, std::move(data));
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
  validate_extractor(m.extractor);
  std::string out = "{\"format_version\":" + std::to_string(kCheckpointVersion);
  out += ",\"extractor\":{\"layer_dims\":[";
  for (size_t i = 0; i < m.extractor.layer_dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(m.extractor.layer_dims[i]);
  }
  out += "],\"activation\":\"";
  out += m.extractor.activation == Activation::kTanh ? "tanh" : "relu";
  out += "\",\"weights\":[";
  for (size_t i = 0; i < m.extractor.weights.size(); ++i) {
    if (i) out += ',';
    emit_matrix(&out, m.extractor.weights[i]);
  }
  out += "],\"biases\":[";
  for (size_t i = 0; i < m.extractor.biases.size(); ++i) {
    if (i) out += ',';
    emit_matrix(&out, m.extractor.biases[i]);
  }
  out += "]},\"classifier\":{\"weight\":";
  emit_matrix(&out, m.classifier.weight);
  out += ",\"bias\":";
  emit_matrix(&out, m.classifier.bias);
  out += "}}\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValueError("cannot open checkpoint for writing: " + path);
  f << out;
  if (!f.good()) throw ValueError("failed writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path + ": " + e.what());
  }

  try {
    if (j.at("format_version").get<int>() != kCheckpointVersion) {
      throw ParseError("checkpoint " + path + ": unsupported format_version");
    }
    Model m;
    const auto& je = j.at("extractor");
    m.extractor.layer_dims = je.at("layer_dims").get<std::vector<int>>();
    const std::string act = je.at("activation").get<std::string>();
    if (act == "tanh") {
      m.extractor.activation = Activation::kTanh;
    } else if (act == "relu") {
      m.extractor.activation = Activation::kRelu;
    } else {
      throw ParseError("checkpoint " + path + ": unknown activation " + act);
    }
    for (const auto& w : je.at("weights")) {
      m.extractor.weights.push_back(parse_matrix(w));
    }
    for (const auto& b : je.at("biases")) {
      m.extractor.biases.push_back(parse_matrix(b));
    }
    m.classifier.weight = parse_matrix(j.at("classifier").at("weight"));
    m.classifier.bias = parse_matrix(j.at("classifier").at("bias"));
    validate_extractor(m.extractor);
    if (m.classifier.weight.cols() != m.extractor.out_dim()) {
      throw ParseError("checkpoint " + path +
                       ": classifier width does not match extractor output");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace daln
