// Python bindings for the core pipeline: parse/encode **kern text, window
// sampling, the classifier models (init / forward / predict / persistence),
// and the small evaluation helpers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <string>
#include <vector>

#include "kernclass/corpus.hpp"
#include "kernclass/errors.hpp"
#include "kernclass/kern_parser.hpp"
#include "kernclass/models.hpp"
#include "kernclass/evaluate.hpp"
#include "kernclass/score_tensor.hpp"
#include "kernclass/vocab.hpp"

namespace py = pybind11;
using namespace kernclass;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<std::uint8_t> bits_to_array(const BitTensor& x) {
    py::array_t<std::uint8_t> out({x.rows(), x.voices(), x.channels()});
    auto view = out.mutable_unchecked<3>();
    for (int t = 0; t < x.rows(); ++t)
        for (int p = 0; p < x.voices(); ++p)
            for (int m = 0; m < x.channels(); ++m)
                view(t, p, m) = x.get(t, p, m) ? 1 : 0;
    return out;
}

BitTensor array_to_bits(const DoubleArray& arr) {
    if (arr.ndim() != 3) throw ShapeMismatch("expected a [rows, voices, channels] array");
    BitTensor x(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                static_cast<int>(arr.shape(2)));
    auto view = arr.unchecked<3>();
    for (int t = 0; t < x.rows(); ++t)
        for (int p = 0; p < x.voices(); ++p)
            for (int m = 0; m < x.channels(); ++m)
                if (view(t, p, m) != 0.0) x.set(t, p, m);
    return x;
}

Tensor array_to_tensor(const DoubleArray& arr) {
    if (arr.ndim() != 3) throw ShapeMismatch("expected a [rows, voices, channels] array");
    Tensor t({static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
              static_cast<int>(arr.shape(2))});
    auto view = arr.unchecked<3>();
    std::size_t i = 0;
    for (py::ssize_t a = 0; a < arr.shape(0); ++a)
        for (py::ssize_t b = 0; b < arr.shape(1); ++b)
            for (py::ssize_t c = 0; c < arr.shape(2); ++c) t[i++] = view(a, b, c);
    return t;
}

// Inference-side handle: configuration + parameters + the fingerprint of the
// vocabulary the model was trained against.
struct Model {
    ModelConfig config;
    ModelParams params;
    std::string vocab_fingerprint;

    Tensor logits(const DoubleArray& input) const {
        Tape tape;
        std::vector<NodeId> nodes = params_on_tape(tape, params, false);
        return tape.value(model_forward(tape, config, nodes, array_to_tensor(input)));
    }
};

Model make_model(const std::string& arch, int classes, int pitch_count, int duration_count,
                 int voice_count, std::uint64_t seed) {
    auto a = arch_from_name(arch);
    if (!a) throw Error("unknown architecture '" + arch + "'");
    ModelConfig cfg;
    cfg.arch = *a;
    cfg.classes = classes;
    cfg.pitch_count = pitch_count;
    cfg.duration_count = duration_count;
    cfg.voice_count = voice_count;
    cfg = cfg.resolved();
    cfg.validate();
    return Model{cfg, init_params(cfg, seed), ""};
}

}  // namespace

PYBIND11_MODULE(kernclass, m) {
    m.doc() = "Composer classification over **kern scores: parsing, binary "
              "encoding, and pooled convolutional classifiers.";

    py::register_exception<Error>(m, "KernError");

    py::class_<EncodingVocab>(m, "Vocab")
        .def_property_readonly("pitch_base", &EncodingVocab::pitch_base)
        .def_property_readonly("pitch_count", &EncodingVocab::pitch_count)
        .def_property_readonly("duration_count", &EncodingVocab::duration_count)
        .def_property_readonly("voice_count", &EncodingVocab::voice_count)
        .def_property_readonly("channel_count", &EncodingVocab::channel_count)
        .def_property_readonly("continuation_channel", &EncodingVocab::continuation_channel)
        .def_property_readonly("values",
                               [](const EncodingVocab& v) {
                                   std::vector<std::string> out;
                                   for (const Rational& r : v.values()) out.push_back(r.str());
                                   return out;
                               })
        .def("fingerprint", &EncodingVocab::fingerprint)
        .def("serialize", &EncodingVocab::serialize)
        .def_static("deserialize", &EncodingVocab::deserialize, py::arg("text"))
        .def("save", [](const EncodingVocab& v, const std::filesystem::path& p) { save_vocab(p, v); },
             py::arg("path"))
        .def_static("load", &load_vocab, py::arg("path"))
        .def("__eq__", [](const EncodingVocab& a, const EncodingVocab& b) { return a == b; })
        .def("__repr__", [](const EncodingVocab& v) {
            return "Vocab(pitch_base=" + std::to_string(v.pitch_base()) +
                   ", pitch_count=" + std::to_string(v.pitch_count()) +
                   ", duration_count=" + std::to_string(v.duration_count()) +
                   ", voice_count=" + std::to_string(v.voice_count()) + ")";
        });

    m.def("build_vocab", &build_vocab_from_manifest, py::arg("manifest"),
          "Builds the encoding vocabulary from every score in a manifest.");

    m.def(
        "vocab_from_scores",
        [](const std::vector<std::string>& texts, const std::string& scale) {
            EncodingVocab v;
            Rational s = Rational::parse(scale);
            for (const std::string& text : texts) v.observe_score(parse_score(text), s);
            return v;
        },
        py::arg("texts"), py::arg("scale") = "1/1",
        "Builds a vocabulary directly from **kern score texts.");

    m.def(
        "encode",
        [](const std::string& text, const EncodingVocab& vocab, const std::string& scale,
           bool permissive) {
            EncodeOptions opts;
            opts.permissive = permissive;
            return bits_to_array(encode_score(parse_score(text), vocab, Rational::parse(scale), opts));
        },
        py::arg("text"), py::arg("vocab"), py::arg("scale") = "1/1", py::arg("permissive") = false,
        "Parses **kern text and encodes it as a binary [rows, voices, channels] array.");

    m.def(
        "windows",
        [](const DoubleArray& x, int sample_rows) {
            return bits_to_array(subsample(array_to_bits(x), sample_rows));
        },
        py::arg("x"), py::arg("sample_rows"),
        "Stacks the start / centered / end windows of a binary score array into "
        "a [3*sample_rows, voices, channels] array, zero-padded past the end.");

    m.def("architectures", [] {
        std::vector<std::string> names;
        for (Arch a : all_archs()) names.push_back(arch_name(a));
        return names;
    });

    py::class_<Model>(m, "Model")
        .def_static("create", &make_model, py::arg("arch"), py::arg("classes"),
                    py::arg("pitch_count"), py::arg("duration_count"), py::arg("voice_count"),
                    py::arg("seed") = 0,
                    "Freshly initialized model (uniform +/- 1/sqrt(fanin) per tensor).")
        .def_property_readonly("arch", [](const Model& m_) { return arch_name(m_.config.arch); })
        .def_property_readonly("classes", [](const Model& m_) { return m_.config.classes; })
        .def_property_readonly("parameter_count",
                               [](const Model& m_) { return m_.params.total_scalars(); })
        .def_readwrite("vocab_fingerprint", &Model::vocab_fingerprint)
        .def(
            "logits",
            [](const Model& m_, const DoubleArray& x) {
                Tensor z = m_.logits(x);
                py::array_t<double> out(z.dim(0));
                auto view = out.mutable_unchecked<1>();
                for (int i = 0; i < z.dim(0); ++i) view(i) = z[static_cast<std::size_t>(i)];
                return out;
            },
            py::arg("x"), "Class scores for one binary score array [rows, voices, channels].")
        .def(
            "predict",
            [](const Model& m_, const DoubleArray& x) { return predict_class(m_.logits(x)); },
            py::arg("x"), "Index of the best-scoring class (lowest index wins ties).")
        .def(
            "save",
            [](const Model& m_, const std::filesystem::path& path) {
                save_model(path, m_.config, m_.params, m_.vocab_fingerprint);
            },
            py::arg("path"))
        .def_static(
            "load",
            [](const std::filesystem::path& path) {
                LoadedModel lm = load_model(path);
                return Model{lm.config, std::move(lm.params), lm.vocab_fingerprint};
            },
            py::arg("path"))
        .def("__repr__", [](const Model& m_) {
            return std::string("Model(arch=") + arch_name(m_.config.arch) +
                   ", classes=" + std::to_string(m_.config.classes) + ")";
        });

    m.def("majority_baseline", &majority_baseline, py::arg("labels"),
          "Accuracy of always predicting the most frequent label.");
    m.def("spearman_rho", &spearman_rho, py::arg("a"), py::arg("b"),
          "Spearman rank correlation (average ranks on ties; 0 for constant input).");
}
