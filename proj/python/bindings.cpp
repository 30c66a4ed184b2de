#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ai2v/checkpoint.hpp"
#include "ai2v/commands.hpp"
#include "ai2v/config.hpp"
#include "ai2v/eval.hpp"
#include "ai2v/i2v.hpp"
#include "ai2v/train.hpp"

namespace py = pybind11;
using namespace ai2v;

namespace {

using Items = std::vector<ItemId>;

void check_items(const Items& items, std::size_t n, const char* what) {
  for (ItemId i : items) {
    if (i >= n) throw py::index_error(std::string(what) + " item " + std::to_string(i) + " out of range");
  }
}

struct Ai2vModel {
  Ai2vParams params;
  std::optional<AdagradState<Ai2vParams>> state;
  std::vector<double> epoch_loss;

  void check(const Items& items, const char* what) const { check_items(items, params.dims.items, what); }
};

struct I2vModel {
  I2vParams params;
  std::optional<AdagradState<I2vParams>> state;
  std::vector<double> epoch_loss;

  void check(const Items& items, const char* what) const { check_items(items, params.num_items(), what); }
};

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  for (std::size_t k = 0; k < kCutoffs.size(); ++k) {
    d[py::str("hr@" + std::to_string(kCutoffs[k]))] = r.hr[k];
    d[py::str("mrr@" + std::to_string(kCutoffs[k]))] = r.mrr[k];
  }
  d["n_examples"] = r.n_examples;
  std::vector<std::uint32_t> ranks;
  for (const auto& x : r.ranks) ranks.push_back(x.rank);
  d["ranks"] = ranks;
  return d;
}

std::vector<std::pair<Items, ItemId>> examples(const std::vector<TrainExample>& xs) {
  std::vector<std::pair<Items, ItemId>> out;
  for (const auto& e : xs) out.emplace_back(Items(e.context().begin(), e.context().end()), e.target);
  return out;
}

}  // namespace

PYBIND11_MODULE(_ai2v, m) {
  m.doc() = "AI2V / I2V collaborative filtering core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  py::class_<RunConfig>(m, "Config")
      .def(py::init<>())
      .def("set", &RunConfig::set, py::arg("key"), py::arg("value"))
      .def("merge_file", &RunConfig::merge_file, py::arg("path"))
      .def("apply_override", &RunConfig::apply_override, py::arg("assignment"))
      .def("effective", &RunConfig::effective)
      .def("to_text", &RunConfig::to_text)
      .def("validate", &RunConfig::validate);

  m.def(
      "prepare",
      [](const RunConfig& c) {
        std::ostringstream out;
        cmd_prepare(c, out);
        return out.str();
      },
      py::arg("config"), "Builds the processed corpus; returns the stats table.");
  m.def(
      "train",
      [](const RunConfig& c) {
        std::ostringstream out;
        cmd_train(c, out);
        return out.str();
      },
      py::arg("config"), "Trains config.model and writes the checkpoint; returns the epoch log.");
  m.def(
      "evaluate",
      [](const RunConfig& c) {
        std::ostringstream out;
        const auto rows = cmd_evaluate(c, out);
        std::vector<std::pair<std::string, py::dict>> result;
        for (const auto& [name, r] : rows) result.emplace_back(name, report_dict(r));
        return result;
      },
      py::arg("config"), "Evaluates every listed checkpoint; returns (model, metrics) pairs.");
  m.def(
      "recommend",
      [](const RunConfig& c, const std::vector<std::string>& history, std::size_t top_k) {
        std::ostringstream out;
        cmd_recommend(c, history, top_k, out);
        std::vector<std::pair<std::string, double>> rows;
        std::istringstream lines(out.str());
        std::string line;
        while (std::getline(lines, line)) {
          const auto tab = line.find('\t');
          rows.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
        }
        return rows;
      },
      py::arg("config"), py::arg("history"), py::arg("top_k") = 10);

  py::class_<CorpusSplit>(m, "Corpus")
      .def_static("load", &load_corpus, py::arg("path"))
      .def_property_readonly("num_items", &CorpusSplit::num_items)
      .def_property_readonly("num_users", [](const CorpusSplit& s) { return s.users.size(); })
      .def_property_readonly("train", [](const CorpusSplit& s) { return examples(s.train); })
      .def_property_readonly("test", [](const CorpusSplit& s) { return examples(s.test); })
      .def_property_readonly("popularity", [](const CorpusSplit& s) { return s.train_popularity; })
      .def("external_id", [](const CorpusSplit& s, ItemId i) { return s.vocab.external(i); })
      .def("index_of", [](const CorpusSplit& s, const std::string& id) { return s.vocab.find(id); });

  py::class_<Ai2vModel>(m, "Ai2vModel")
      .def_static(
          "load",
          [](const std::string& path) {
            auto ck = load_ai2v_checkpoint(path);
            return Ai2vModel{std::move(ck.params), std::move(ck.state), {}};
          },
          py::arg("path"))
      .def_static(
          "init",
          [](std::size_t items, std::size_t dim, std::size_t attn_dim, std::size_t heads, std::uint64_t seed) {
            Rng rng = Rng::stream(seed, "init");
            return Ai2vModel{Ai2vParams::init({items, dim, attn_dim, heads}, rng), std::nullopt, {}};
          },
          py::arg("items"), py::arg("dim") = 100, py::arg("attn_dim") = 40, py::arg("heads") = 1, py::arg("seed") = 1)
      .def_static(
          "fit",
          [](const CorpusSplit& split, const RunConfig& c) {
            py::gil_scoped_release release;
            auto r = fit(split, c.train);
            return Ai2vModel{std::move(r.params), std::move(r.state), std::move(r.epoch_loss)};
          },
          py::arg("corpus"), py::arg("config"))
      .def("save",
           [](const Ai2vModel& mdl, const std::string& path, bool with_state) {
             save_checkpoint(path, mdl.params, with_state && mdl.state ? &*mdl.state : nullptr);
           },
           py::arg("path"), py::arg("with_state") = true)
      .def_property_readonly("num_items", [](const Ai2vModel& mdl) { return mdl.params.dims.items; })
      .def_property_readonly("dims",
                             [](const Ai2vModel& mdl) {
                               const auto& d = mdl.params.dims;
                               return py::make_tuple(d.items, d.dim, d.attn_dim, d.heads);
                             })
      .def_readonly("epoch_loss", &Ai2vModel::epoch_loss)
      .def("score",
           [](const Ai2vModel& mdl, const Items& context, const Items& candidates) {
             mdl.check(context, "context");
             mdl.check(candidates, "candidate");
             if (context.empty()) throw py::value_error("empty context");
             return score_catalog(mdl.params, context, candidates);
           },
           py::arg("context"), py::arg("candidates"))
      .def("attention_weights",
           [](const Ai2vModel& mdl, std::size_t head, const Items& context, ItemId target) {
             mdl.check(context, "context");
             mdl.check({target}, "target");
             if (head >= mdl.params.dims.heads) throw py::index_error("head out of range");
             if (context.empty()) throw py::value_error("empty context");
             return attention_weights(mdl.params, head, context, target);
           },
           py::arg("head"), py::arg("context"), py::arg("target"))
      .def("loss",
           [](const Ai2vModel& mdl, const Items& context, ItemId target, const Items& negatives) {
             mdl.check(context, "context");
             mdl.check(negatives, "negative");
             mdl.check({target}, "target");
             if (context.empty()) throw py::value_error("empty context");
             return sampled_softmax_loss(mdl.params, context, target, negatives);
           },
           py::arg("context"), py::arg("target"), py::arg("negatives"))
      .def("recommend",
           [](const Ai2vModel& mdl, const Items& context, std::size_t top_k, bool exclude_seen) {
             mdl.check(context, "context");
             if (context.empty()) throw py::value_error("empty context");
             return recommend(Ai2vScorer(mdl.params), context, top_k, exclude_seen);
           },
           py::arg("context"), py::arg("top_k") = 10, py::arg("exclude_seen") = false)
      .def("evaluate",
           [](const Ai2vModel& mdl, const CorpusSplit& split, bool exclude_seen) {
             return report_dict(evaluate(Ai2vScorer(mdl.params), split, {exclude_seen, 1}));
           },
           py::arg("corpus"), py::arg("exclude_seen") = false);

  py::class_<I2vModel>(m, "I2vModel")
      .def_static(
          "load",
          [](const std::string& path) {
            auto ck = load_i2v_checkpoint(path);
            return I2vModel{std::move(ck.params), std::move(ck.state), {}};
          },
          py::arg("path"))
      .def_static(
          "fit",
          [](const CorpusSplit& split, const RunConfig& c) {
            py::gil_scoped_release release;
            auto r = train_i2v(split, c.train);
            return I2vModel{std::move(r.params), std::move(r.state), std::move(r.epoch_loss)};
          },
          py::arg("corpus"), py::arg("config"))
      .def("save",
           [](const I2vModel& mdl, const std::string& path, bool with_state) {
             save_checkpoint(path, mdl.params, with_state && mdl.state ? &*mdl.state : nullptr);
           },
           py::arg("path"), py::arg("with_state") = true)
      .def_property_readonly("num_items", [](const I2vModel& mdl) { return mdl.params.num_items(); })
      .def_property_readonly("dim", [](const I2vModel& mdl) { return mdl.params.dim(); })
      .def_readonly("epoch_loss", &I2vModel::epoch_loss)
      .def("user_vector",
           [](const I2vModel& mdl, const Items& context) {
             mdl.check(context, "context");
             return i2v_user_vector(mdl.params, context);
           },
           py::arg("context"))
      .def("score",
           [](const I2vModel& mdl, const Items& context, const Items& candidates) {
             mdl.check(context, "context");
             mdl.check(candidates, "candidate");
             std::vector<double> out(candidates.size());
             I2vScorer(mdl.params).score(context, candidates, out);
             return out;
           },
           py::arg("context"), py::arg("candidates"))
      .def("pair_loss",
           [](const I2vModel& mdl, ItemId context, ItemId target, const Items& negatives) {
             mdl.check({context, target}, "pair");
             mdl.check(negatives, "negative");
             return sgns_pair_loss(mdl.params, context, target, negatives);
           },
           py::arg("context"), py::arg("target"), py::arg("negatives"))
      .def("evaluate",
           [](const I2vModel& mdl, const CorpusSplit& split, bool exclude_seen) {
             return report_dict(evaluate(I2vScorer(mdl.params), split, {exclude_seen, 1}));
           },
           py::arg("corpus"), py::arg("exclude_seen") = false);

  m.def(
      "cosine", [](const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) throw py::value_error("length mismatch");
        return cosine(a, b);
      },
      py::arg("u"), py::arg("v"));
  m.def("hr_at_k", [](const std::vector<std::uint32_t>& r, std::size_t k) { return hr_at_k(r, k); }, py::arg("ranks"),
        py::arg("k"));
  m.def("mrr_at_k", [](const std::vector<std::uint32_t>& r, std::size_t k) { return mrr_at_k(r, k); },
        py::arg("ranks"), py::arg("k"));
  m.def(
      "rank",
      [](const Items& candidates, const std::vector<double>& scores, ItemId target) {
        if (candidates.size() != scores.size()) throw py::value_error("length mismatch");
        return rank_from_scores(candidates, scores, target).rank;
      },
      py::arg("candidates"), py::arg("scores"), py::arg("target"));
}
