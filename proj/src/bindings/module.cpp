#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "dhap/cli.hpp"

namespace py = pybind11;
using namespace dhap;

namespace {

class Generator {
 public:
  explicit Generator(const std::filesystem::path& dir) : loaded_(load_model(dir)) {}

  std::string generate(const std::string& post, const std::vector<std::pair<std::string, std::string>>& history,
                       std::size_t beam, std::size_t max_len) {
    ModelInput input = encode_input(corpus::tokenize(post), pairs(history), loaded_.vocab);
    if (input.post.empty()) throw std::invalid_argument("post is empty after tokenization");
    DecodeResult r = decode(*loaded_.model, input, {max_len, beam, false}, &cache_);
    return corpus::join_tokens(loaded_.vocab.decode(strip_eos(r.tokens)));
  }

  // Greedy decoding with the per-step mode probabilities.
  py::list trace(const std::string& post, const std::vector<std::pair<std::string, std::string>>& history,
                 std::size_t max_len) {
    ModelInput input = encode_input(corpus::tokenize(post), pairs(history), loaded_.vocab);
    DecodeResult r = greedy_decode(*loaded_.model, input, max_len, &cache_, true);
    py::list out;
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      py::dict d;
      d["token"] = loaded_.vocab.token(r.tokens[t]);
      d["p_gen"] = r.steps[t].dist.p_gen;
      d["p_copy"] = r.steps[t].dist.p_copy;
      d["memory_weights"] = r.steps[t].memory_weights;
      out.append(d);
    }
    return out;
  }

  std::string variant() const { return loaded_.model->config().variant.tag(); }
  std::size_t vocab_size() const { return loaded_.vocab.size(); }

 private:
  static std::vector<corpus::DialoguePair> pairs(const std::vector<std::pair<std::string, std::string>>& history) {
    std::vector<corpus::DialoguePair> out;
    for (const auto& [post, response] : history) {
      corpus::DialoguePair p;
      p.post.tokens = corpus::tokenize(post);
      if (p.post.tokens.empty()) p.post.tokens = {corpus::Vocabulary().token(corpus::Vocabulary::kUnk)};
      p.response.tokens = corpus::tokenize(response);
      if (!p.response.tokens.empty()) out.push_back(std::move(p));
    }
    return out;
  }

  LoadedModel loaded_;
  ProfileCache cache_;
};

py::tuple run_cli(const std::vector<std::string>& args, const std::string& input) {
  std::vector<const char*> argv{"dhap"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

std::string synth_tsv(std::size_t users, std::size_t pairs, std::size_t persona, std::uint64_t seed) {
  corpus::SynthOptions so;
  so.n_users = users;
  so.pairs_per_user = pairs;
  so.persona_tokens_per_user = persona;
  so.seed = seed;
  std::ostringstream out;
  corpus::write_tsv(out, corpus::synth_corpus(so));
  return out.str();
}

}  // namespace

PYBIND11_MODULE(dhap, m) {
  m.doc() = "Personalized response generation with implicit user profiles";

  m.def("tokenize", &corpus::tokenize, py::arg("text"));
  m.def("synth_tsv", &synth_tsv, py::arg("users") = 10, py::arg("pairs") = 12, py::arg("persona") = 2,
        py::arg("seed") = 7, "Synthetic persona corpus in the six-column TSV format");
  m.def("run", &run_cli, py::arg("args"), py::arg("input") = "",
        "Runs a dhap subcommand; returns (exit_code, stdout, stderr)");

  m.def("bleu", &eval::bleu, py::arg("candidate"), py::arg("reference"), py::arg("n") = 1);
  m.def("corpus_bleu", &eval::corpus_bleu, py::arg("candidates"), py::arg("references"), py::arg("n") = 1);
  m.def("rouge_l", &eval::rouge_l, py::arg("candidate"), py::arg("reference"));
  m.def("dist_n", &eval::dist_n, py::arg("candidates"), py::arg("n") = 1);
  m.def("persona_f1", &eval::persona_f1, py::arg("candidate"), py::arg("history_responses"));

  py::class_<Generator>(m, "Generator")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def("generate", &Generator::generate, py::arg("post"),
           py::arg("history") = std::vector<std::pair<std::string, std::string>>{}, py::arg("beam") = 1,
           py::arg("max_len") = 30)
      .def("trace", &Generator::trace, py::arg("post"),
           py::arg("history") = std::vector<std::pair<std::string, std::string>>{}, py::arg("max_len") = 30)
      .def_property_readonly("variant", &Generator::variant)
      .def_property_readonly("vocab_size", &Generator::vocab_size);
}
