#include "dualview/toytrain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

namespace dualview::toytrain {

namespace {

constexpr char kMagic[8] = {'D', 'V', 'E', 'M', 'B', '0', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

// Gradient of a loss through u = m / ||m|| back to m.
std::vector<double> unnormalize_gradient(const std::vector<double>& grad_unit, const Encoding& enc) {
  double along = dot(grad_unit, enc.unit);
  std::vector<double> out(grad_unit.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (grad_unit[i] - along * enc.unit[i]) / enc.norm;
  return out;
}

void scatter(SparseGradient& grad, const Encoding& enc, const std::vector<double>& grad_mean, std::size_t dim) {
  for (const auto& [bucket, weight] : enc.weights) {
    auto& row = grad[bucket];
    if (row.empty()) row.assign(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) row[i] += weight * grad_mean[i];
  }
}

}  // namespace

void EncoderParams::validate() const {
  if (dim < 2) throw std::invalid_argument("encoder dim must be at least 2");
  if (num_buckets < 1) throw std::invalid_argument("encoder needs at least one bucket");
  if (!(tau > 0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be finite and positive");
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  if (table.size() != num_buckets * dim) throw std::invalid_argument("embedding table has the wrong size");
  for (double v : table)
    if (!std::isfinite(v)) throw std::invalid_argument("embedding table has a non-finite entry");
}

EncoderParams init_params(std::size_t num_buckets, std::size_t dim, double tau, std::size_t max_tokens,
                          double init_scale, std::uint64_t seed) {
  if (!(init_scale > 0)) throw std::invalid_argument("init_scale must be positive");
  EncoderParams p;
  p.num_buckets = num_buckets;
  p.dim = dim;
  p.tau = tau;
  p.max_tokens = max_tokens;
  p.table.resize(num_buckets * dim);
  Rng rng(derive_seed(seed, "encoder/init"));
  for (double& v : p.table) v = rng.uniform(-init_scale, init_scale);
  p.validate();
  return p;
}

std::size_t token_bucket(std::string_view token, std::size_t num_buckets) {
  return static_cast<std::size_t>(fnv1a64(token) % num_buckets);
}

std::vector<std::size_t> text_buckets(std::string_view text, const EncoderParams& params) {
  auto tokens = tokenize(text);
  if (tokens.size() > params.max_tokens) tokens.resize(params.max_tokens);
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(token_bucket(t, params.num_buckets));
  return out;
}

Encoding encode_detailed(std::string_view text, const EncoderParams& params) {
  auto buckets = text_buckets(text, params);
  if (buckets.empty()) throw DegenerateEncodingError("no tokens to encode in '" + std::string(text) + "'");

  std::map<std::size_t, std::size_t> counts;
  for (std::size_t b : buckets) ++counts[b];
  const double n = static_cast<double>(buckets.size());

  Encoding enc;
  std::vector<double> mean(params.dim, 0.0);
  for (const auto& [bucket, count] : counts) {
    double w = static_cast<double>(count) / n;
    enc.weights.emplace_back(bucket, w);
    auto row = params.row(bucket);
    for (std::size_t i = 0; i < params.dim; ++i) mean[i] += w * row[i];
  }
  enc.norm = std::sqrt(dot(mean, mean));
  if (!(enc.norm > 0) || !std::isfinite(enc.norm))
    throw DegenerateEncodingError("degenerate mean embedding for '" + std::string(text) + "'");
  enc.unit.resize(params.dim);
  for (std::size_t i = 0; i < params.dim; ++i) enc.unit[i] = mean[i] / enc.norm;
  return enc;
}

std::vector<double> encode(std::string_view text, const EncoderParams& params) {
  return encode_detailed(text, params).unit;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double infonce_loss_from_scores(std::span<const double> scores, double tau) {
  if (scores.size() < 2) throw std::invalid_argument("infonce_loss needs at least one negative");
  if (!(tau > 0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be finite and positive");
  double top = -INFINITY;
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite similarity score");
    top = std::max(top, s / tau);
  }
  double denom = 0.0;
  for (double s : scores) denom += std::exp(s / tau - top);
  // log-sum-exp minus the positive logit; never negative mathematically.
  return std::max(0.0, top + std::log(denom) - scores[0] / tau);
}

double infonce_loss(std::span<const double> query, std::span<const double> pos,
                    const std::vector<std::vector<double>>& negs, double tau) {
  for (double v : query)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite query vector");
  std::vector<double> scores;
  scores.reserve(negs.size() + 1);
  scores.push_back(dot(query, pos));
  for (const auto& n : negs) scores.push_back(dot(query, n));
  return infonce_loss_from_scores(scores, tau);
}

LossAndGradient loss_gradient(const mixer::TrainingBatch& batch, const EncoderParams& params) {
  if (batch.examples.empty()) throw std::invalid_argument("loss_gradient: empty batch");
  LossAndGradient out;
  const double tau = params.tau;

  for (const auto& ex : batch.examples) {
    Encoding q = encode_detailed(ex.input_text, params);
    std::vector<Encoding> docs;
    docs.reserve(ex.negatives.size() + 1);
    docs.push_back(encode_detailed(ex.positive.text, params));
    for (const auto& c : ex.negatives) docs.push_back(encode_detailed(c.doc.text, params));

    std::vector<double> scores(docs.size());
    for (std::size_t j = 0; j < docs.size(); ++j) scores[j] = dot(q.unit, docs[j].unit);
    double loss = infonce_loss_from_scores(scores, tau);
    out.loss += loss;
    out.example_losses.push_back(loss);

    double top = *std::max_element(scores.begin(), scores.end()) / tau;
    std::vector<double> prob(scores.size());
    double z = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) z += prob[j] = std::exp(scores[j] / tau - top);

    // dL/ds_j = (softmax_j - [j == positive]) / tau
    std::vector<double> grad_q(params.dim, 0.0);
    for (std::size_t j = 0; j < docs.size(); ++j) {
      double g = (prob[j] / z - (j == 0 ? 1.0 : 0.0)) / tau;
      for (std::size_t i = 0; i < params.dim; ++i) grad_q[i] += g * docs[j].unit[i];
      std::vector<double> grad_d(params.dim);
      for (std::size_t i = 0; i < params.dim; ++i) grad_d[i] = g * q.unit[i];
      scatter(out.gradient, docs[j], unnormalize_gradient(grad_d, docs[j]), params.dim);
    }
    scatter(out.gradient, q, unnormalize_gradient(grad_q, q), params.dim);
  }
  return out;
}

double batch_loss(const mixer::TrainingBatch& batch, const EncoderParams& params) {
  double total = 0.0;
  for (const auto& ex : batch.examples) {
    auto q = encode(ex.input_text, params);
    std::vector<double> scores;
    scores.push_back(dot(q, encode(ex.positive.text, params)));
    for (const auto& c : ex.negatives) scores.push_back(dot(q, encode(c.doc.text, params)));
    total += infonce_loss_from_scores(scores, params.tau);
  }
  return total;
}

TrainResult train(const std::vector<mixer::TrainingExample>& dataset, const EncoderParams& params_init,
                  const TrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be at least 1");
  if (!(config.learning_rate >= 0) || !std::isfinite(config.learning_rate))
    throw std::invalid_argument("train: learning rate must be finite and non-negative");
  params_init.validate();
  auto require_tokens = [&](const std::string& text) {
    if (text_buckets(text, params_init).empty()) throw DegenerateEncodingError("no tokens in '" + text + "'");
  };
  for (const auto& ex : dataset) {
    require_tokens(ex.input_text);
    require_tokens(ex.positive.text);
    for (const auto& c : ex.negatives) require_tokens(c.doc.text);
  }

  TrainResult result{params_init, {}};
  EncoderParams& params = result.params;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto batches = mixer::assemble_batches(dataset, config.batch_size,
                                           derive_seed(config.seed, "train/epoch/" + std::to_string(epoch)));
    std::vector<double> losses;
    losses.reserve(dataset.size());
    for (const auto& batch : batches) {
      LossAndGradient lg;
      try {
        lg = loss_gradient(batch, params);
      } catch (const DegenerateEncodingError& e) {
        // Every text has tokens, so this can only come from the updated table.
        throw DivergenceError(epoch, "epoch " + std::to_string(epoch) + ": " + e.what());
      }
      if (!std::isfinite(lg.loss))
        throw DivergenceError(epoch, "non-finite loss in epoch " + std::to_string(epoch));
      losses.insert(losses.end(), lg.example_losses.begin(), lg.example_losses.end());
      for (const auto& [bucket, g] : lg.gradient) {
        auto row = params.row(bucket);
        for (std::size_t i = 0; i < params.dim; ++i) {
          row[i] -= config.learning_rate * g[i];
          if (!std::isfinite(row[i]))
            throw DivergenceError(epoch, "non-finite parameter in epoch " + std::to_string(epoch));
        }
      }
    }
    // Sorted summation: the epoch mean does not depend on batch order.
    std::sort(losses.begin(), losses.end());
    double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    if (!std::isfinite(mean)) throw DivergenceError(epoch, "non-finite loss in epoch " + std::to_string(epoch));
    result.loss_trajectory.push_back(mean);
  }
  return result;
}

double two_view_loss(double score_gap, double tau) {
  // -ln sigmoid(x) = log1p(exp(-x)), evaluated stably for both signs.
  auto softplus_neg = [](double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); };
  double x = score_gap / tau;
  return softplus_neg(x) + softplus_neg(-x);
}

double instruction_blind_floor(std::span<const double> delta_grid, double tau) {
  if (delta_grid.empty()) throw std::invalid_argument("instruction_blind_floor: empty grid");
  double best = INFINITY;
  for (double d : delta_grid) best = std::min(best, two_view_loss(d, tau));
  return best;
}

std::vector<std::pair<std::string, double>> rank_documents(std::string_view query_text,
                                                           const std::vector<Document>& docs,
                                                           const EncoderParams& params) {
  auto q = encode(query_text, params);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.emplace_back(d.doc_id, dot(q, encode(d.text, params)));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

void save_params(const std::filesystem::path& path, const EncoderParams& params) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, sizeof kMagic);
  write_u64(out, params.num_buckets);
  write_u64(out, params.dim);
  for (double v : params.table) write_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

EncoderParams load_params(const std::filesystem::path& path, double tau, std::size_t max_tokens) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw SchemaError(path.string() + ": bad magic");
  EncoderParams p;
  p.num_buckets = read_u64(in);
  p.dim = read_u64(in);
  p.tau = tau;
  p.max_tokens = max_tokens;
  if (!in || p.num_buckets == 0 || p.dim == 0 || p.num_buckets > (std::size_t{1} << 32) || p.dim > 65536)
    throw SchemaError(path.string() + ": bad header");
  p.table.resize(p.num_buckets * p.dim);
  for (double& v : p.table) v = std::bit_cast<double>(read_u64(in));
  if (!in) throw SchemaError(path.string() + ": truncated embedding table");
  p.validate();
  return p;
}

}  // namespace dualview::toytrain
