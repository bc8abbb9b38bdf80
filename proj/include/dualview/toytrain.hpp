#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dualview/common.hpp"
#include "dualview/mixer.hpp"

namespace dualview::toytrain {

// Hashed bag-of-tokens encoder: one embedding row per hash bucket, mean
// pooled and L2-normalized. Queries and documents share the table.
struct EncoderParams {
  std::size_t num_buckets = std::size_t{1} << 16;
  std::size_t dim = 64;
  double tau = 0.02;
  std::size_t max_tokens = 64;
  std::vector<double> table;  // row-major, num_buckets x dim

  std::span<double> row(std::size_t bucket) { return {table.data() + bucket * dim, dim}; }
  std::span<const double> row(std::size_t bucket) const { return {table.data() + bucket * dim, dim}; }

  void validate() const;
  bool operator==(const EncoderParams&) const = default;
};

// Entries uniform in (-init_scale, +init_scale).
EncoderParams init_params(std::size_t num_buckets, std::size_t dim, double tau, std::size_t max_tokens,
                          double init_scale, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  double init_scale = 0.125;  // 1/sqrt(64)
  std::size_t batch_size = 8;
};

class DegenerateEncodingError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what) : Error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

std::size_t token_bucket(std::string_view token, std::size_t num_buckets);

// Buckets of the (truncated) token stream, with multiplicity.
std::vector<std::size_t> text_buckets(std::string_view text, const EncoderParams& params);

// Pre-normalization state kept for the backward pass.
struct Encoding {
  std::vector<double> unit;                            // output, ||unit|| == 1
  double norm = 0.0;                                   // ||mean||
  std::vector<std::pair<std::size_t, double>> weights;  // bucket -> count / n, sorted by bucket
};

Encoding encode_detailed(std::string_view text, const EncoderParams& params);
std::vector<double> encode(std::string_view text, const EncoderParams& params);

double dot(std::span<const double> a, std::span<const double> b);

// -log softmax at the positive over {pos} + negs of dot(query, .) / tau.
double infonce_loss(std::span<const double> query, std::span<const double> pos,
                    const std::vector<std::vector<double>>& negs, double tau);

// Same loss from raw similarity scores; scores[0] is the positive.
double infonce_loss_from_scores(std::span<const double> scores, double tau);

using SparseGradient = std::map<std::size_t, std::vector<double>>;

struct LossAndGradient {
  double loss = 0.0;  // summed over the batch's examples
  std::vector<double> example_losses;
  SparseGradient gradient;
};

// Summed per-example InfoNCE of a batch and its exact gradient with respect
// to the embedding rows the batch touches.
LossAndGradient loss_gradient(const mixer::TrainingBatch& batch, const EncoderParams& params);

double batch_loss(const mixer::TrainingBatch& batch, const EncoderParams& params);

struct TrainResult {
  EncoderParams params;
  std::vector<double> loss_trajectory;  // mean per-example loss of each epoch
};

// Plain SGD, one step per batch; batches are re-assembled each epoch from
// (seed, epoch). Throws DivergenceError on a non-finite loss.
TrainResult train(const std::vector<mixer::TrainingExample>& dataset, const EncoderParams& params_init,
                  const TrainConfig& config);

// Combined loss of the two views of a pair when one query vector serves both:
// -ln sigmoid(gap/tau) - ln sigmoid(-gap/tau).
double two_view_loss(double score_gap, double tau);

// Grid minimum of two_view_loss; witnesses the 2 ln 2 floor.
double instruction_blind_floor(std::span<const double> delta_grid, double tau);

// Descending score, ties by ascending doc_id.
std::vector<std::pair<std::string, double>> rank_documents(std::string_view query_text,
                                                           const std::vector<Document>& docs,
                                                           const EncoderParams& params);

// Flat binary: "DVEMB001", u64 num_buckets, u64 dim, then row-major f64, all
// little-endian.
void save_params(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams load_params(const std::filesystem::path& path, double tau, std::size_t max_tokens);

}  // namespace dualview::toytrain
