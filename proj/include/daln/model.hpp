#pragma once

#include <string>
#include <vector>

#include "daln/autodiff.hpp"
#include "daln/matrix.hpp"
#include "daln/rng.hpp"

namespace daln {

enum class Activation { kTanh, kRelu };

/// Small MLP mapping inputs to feature rows. weights[i] is
/// [layer_dims[i+1] × layer_dims[i]] (output-major), biases[i] is
/// [1 × layer_dims[i+1]]. The activation applies to hidden layers only; the
/// final layer is linear.
struct FeatureExtractor {
  std::vector<int> layer_dims;
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;
  Activation activation = Activation::kTanh;

  int in_dim() const { return layer_dims.front(); }
  int out_dim() const { return layer_dims.back(); }
};

/// Linear map plus row softmax; weight is [k × d], bias [1 × k].
struct Classifier {
  Matrix weight;
  Matrix bias;

  int classes() const { return weight.rows(); }
  int feature_dim() const { return weight.cols(); }
};

/// Feature extractor plus task classifier.
struct Model {
  FeatureExtractor extractor;
  Classifier classifier;
};

/// Domain discriminator for the adversarial baseline: an MLP scoring
/// features, squashed to one probability per row by a sigmoid.
struct DomainDiscriminator {
  FeatureExtractor net;  // out_dim must be 1
};

/// Coefficient of the gradient-reversal layer, updated per step by the
/// trainer's schedule (stays within [0, 1] under the default schedule).
struct GrlState {
  double coeff = 0.0;
};

/// Parameter nodes for one network bound onto a tape. Binding with
/// trainable=true registers parameters that survive tape clears, so an
/// optimizer can keep updating node values across steps.
struct BoundExtractor {
  std::vector<ad::Node*> weights;
  std::vector<ad::Node*> biases;
  Activation activation = Activation::kTanh;
};

struct BoundClassifier {
  ad::Node* weight = nullptr;
  ad::Node* bias = nullptr;
};

struct BoundModel {
  BoundExtractor extractor;
  BoundClassifier classifier;
};

BoundExtractor bind(ad::Tape& tape, const FeatureExtractor& g, bool trainable);
BoundClassifier bind(ad::Tape& tape, const Classifier& c, bool trainable);
BoundModel bind(ad::Tape& tape, const Model& m, bool trainable);

/// Copies bound parameter values back into plain structs.
void write_back(const BoundExtractor& bound, FeatureExtractor* g);
void write_back(const BoundClassifier& bound, Classifier* c);
void write_back(const BoundModel& bound, Model* m);

/// Forward through the extractor on the tape: affine layers with the hidden
/// activation, linear final layer.
ad::Node* extract(ad::Tape& tape, const BoundExtractor& g, ad::Node* x);

/// softmax(f·Wᵀ + bias): rows are nonnegative and sum to 1.
ad::Node* classify(ad::Tape& tape, const BoundClassifier& c, ad::Node* f);

enum class CriticNorm { kNuclear, kFrobenius };

/// Batch critic value: the chosen norm of the prediction matrix divided by
/// the batch size.
ad::Node* critic_score(ad::Tape& tape, const BoundClassifier& c, ad::Node* f,
                       CriticNorm norm);

/// Discriminator forward: extractor layers then sigmoid, giving one
/// domain probability per row.
ad::Node* discriminate(ad::Tape& tape, const BoundExtractor& d, ad::Node* f);

/// Tape-free forward passes for evaluation.
Matrix extract_values(const FeatureExtractor& g, const Matrix& x);
Matrix classify_values(const Model& m, const Matrix& x);

/// Uniform init in ±sqrt(6/(fan_in+fan_out)) per layer, biases zero; entries
/// drawn row-major from the given stream.
FeatureExtractor make_extractor(const std::vector<int>& layer_dims,
                                Activation activation, RngStream& rng);
Classifier make_classifier(int classes, int feature_dim, RngStream& rng);

/// Checkpoint round-trip. The file is JSON with explicit field names and a
/// format_version; every real is printed with 17 significant digits so the
/// decimal text parses back to the identical bits.
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace daln
