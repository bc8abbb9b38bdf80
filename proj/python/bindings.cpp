#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dualview/cli.hpp"
#include "dualview/corpus.hpp"
#include "dualview/metrics.hpp"
#include "dualview/mixer.hpp"
#include "dualview/synth.hpp"
#include "dualview/toytrain.hpp"
#include "dualview/validate.hpp"

namespace py = pybind11;
using namespace dualview;

namespace {

// Records cross the boundary as JSON text; the Python side wraps json.dumps.
InstructTriplet triplet_from_text(const std::string& text) {
  return triplet_from_json(nlohmann::json::parse(text), "argument");
}

using ScoreMap = std::map<std::string, std::map<std::string, double>>;
using RelMap = std::map<std::string, std::map<std::string, int>>;

metrics::RunFile to_run(const ScoreMap& scores) {
  metrics::RunFile run;
  for (const auto& [qid, docs] : scores) {
    auto& ranking = run.queries[qid];
    for (const auto& [doc, score] : docs) ranking.push_back({doc, score});
    metrics::sort_ranking(ranking);
  }
  return run;
}

metrics::Qrels to_qrels(const RelMap& rels) {
  metrics::Qrels q;
  q.judgments = rels;
  return q;
}

metrics::Ranking to_ranking(const std::map<std::string, double>& docs) {
  metrics::Ranking r;
  for (const auto& [doc, score] : docs) r.push_back({doc, score});
  metrics::sort_ranking(r);
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dual-view instruction synthesis, validation, toy training and ranking metrics";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_ValueError);

  m.def("content_hash", [](const std::string& triplet_json) { return content_hash(triplet_from_text(triplet_json)); });
  m.def("render_prompt", [](const std::string& triplet_json, std::size_t target) {
    return synth::render_prompt(triplet_from_text(triplet_json), target);
  });
  m.def("parse_answer", [](const std::string& raw) -> std::pair<std::string, std::string> {
    auto out = synth::parse_answer(raw);
    if (auto* ni = std::get_if<synth::NewInstruction>(&out)) return {"new_instruction", ni->text};
    if (std::holds_alternative<synth::Refused>(out)) return {"refused", ""};
    return {"parse_error", std::get<synth::ParseError>(out).reason};
  }, "Returns (kind, payload) with kind in {'new_instruction', 'refused', 'parse_error'}.");

  m.def("check_sentence_count", [](const std::string& s) {
    auto r = validate::check_sentence_count(s);
    return std::make_pair(r.count, r.passed);
  });
  m.def("check_distinctness", [](const std::string& a, const std::string& b, double threshold) {
    validate::ValidationOptions opts;
    opts.distinctness_threshold = threshold;
    auto r = validate::check_distinctness(a, b, opts);
    return std::make_pair(r.jaccard, r.passed);
  }, py::arg("original"), py::arg("synthesized"), py::arg("threshold") = 0.6);
  m.def("check_banned_content", [](const std::string& s) {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& h : validate::check_banned_content(s)) out.emplace_back(h.pattern, h.offset);
    return out;
  });

  m.def("concat_query", [](const std::string& q, const std::string& i) { return mixer::concat_query(q, i); });
  m.def("strip_instruction", [](const std::string& t) { return mixer::strip_instruction(t); });

  py::class_<toytrain::EncoderParams>(m, "Encoder")
      .def(py::init([](std::size_t num_buckets, std::size_t dim, double tau, std::size_t max_tokens,
                       double init_scale, std::uint64_t seed) {
             return toytrain::init_params(num_buckets, dim, tau, max_tokens, init_scale, seed);
           }),
           py::arg("num_buckets") = std::size_t{1} << 16, py::arg("dim") = 64, py::arg("tau") = 0.02,
           py::arg("max_tokens") = 64, py::arg("init_scale") = 0.125, py::arg("seed") = 0)
      .def_static("load", &toytrain::load_params, py::arg("path"), py::arg("tau"), py::arg("max_tokens"))
      .def_readonly("num_buckets", &toytrain::EncoderParams::num_buckets)
      .def_readonly("dim", &toytrain::EncoderParams::dim)
      .def_readonly("tau", &toytrain::EncoderParams::tau)
      .def("encode", [](const toytrain::EncoderParams& p, const std::string& text) { return toytrain::encode(text, p); })
      .def("rank", [](const toytrain::EncoderParams& p, const std::string& query,
                      const std::vector<std::pair<std::string, std::string>>& docs) {
        std::vector<Document> d;
        for (const auto& [id, text] : docs) d.push_back({id, text});
        return toytrain::rank_documents(query, d, p);
      }, "Rank (doc_id, text) pairs for a query; returns (doc_id, score) best first.");

  m.def("infonce_loss", [](const std::vector<double>& scores, double tau) {
    return toytrain::infonce_loss_from_scores(scores, tau);
  }, "InfoNCE from similarity scores; scores[0] is the positive.");
  m.def("two_view_loss", &toytrain::two_view_loss);
  m.def("instruction_blind_floor", [](const std::vector<double>& grid, double tau) {
    return toytrain::instruction_blind_floor(grid, tau);
  });

  m.def("p_mrr_query", &metrics::p_mrr_query);
  m.def("p_mrr", [](const std::vector<std::tuple<std::string, std::map<std::string, double>,
                                                 std::map<std::string, double>, std::string>>& entries,
                    std::size_t cutoff) {
    std::vector<metrics::PairedEntry> paired;
    for (const auto& [qid, og, nw, target] : entries) paired.push_back({qid, to_ranking(og), to_ranking(nw), target});
    return metrics::p_mrr(paired, cutoff);
  }, py::arg("entries"), py::arg("cutoff") = 1000, "entries: (qid, {doc: score} og, {doc: score} new, target_doc_id)");
  m.def("ndcg_at_k", [](const ScoreMap& run, const RelMap& qrels, const std::string& qid, std::size_t k,
                        bool exponential) {
    return metrics::ndcg_at_k(to_run(run), to_qrels(qrels), qid, k,
                              exponential ? metrics::Gain::Exponential : metrics::Gain::Linear);
  }, py::arg("run"), py::arg("qrels"), py::arg("qid"), py::arg("k"), py::arg("exponential") = false);
  m.def("map_at_k", [](const ScoreMap& run, const RelMap& qrels, const std::string& qid, std::size_t k) {
    return metrics::map_at_k(to_run(run), to_qrels(qrels), qid, k);
  });
  m.def("mrr", [](const ScoreMap& run, const RelMap& qrels, const std::string& qid) {
    return metrics::mrr(to_run(run), to_qrels(qrels), qid);
  });
  m.def("followir_score", [](const std::vector<double>& v) { return metrics::followir_score(v); });

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "dualview");
    return cli::run_cli(args);
  }, "Run the dualview command line with the given arguments; returns the exit code.");
}
