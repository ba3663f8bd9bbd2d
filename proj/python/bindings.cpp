#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "tsacl/analytic_classifier.hpp"
#include "tsacl/checkpoint.hpp"
#include "tsacl/dataset.hpp"
#include "tsacl/encoder.hpp"
#include "tsacl/ensemble.hpp"
#include "tsacl/error.hpp"
#include "tsacl/expansion.hpp"
#include "tsacl/experiment.hpp"
#include "tsacl/metrics.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace tsacl;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

py::array_t<float> samples_array(const data::TimeSeriesDataset& d) {
  py::array_t<float> out({d.size(), d.channels(), d.length()});
  std::copy(d.samples().begin(), d.samples().end(), out.mutable_data());
  return out;
}

py::array_t<std::uint32_t> labels_array(std::span<const std::uint32_t> labels) {
  py::array_t<std::uint32_t> out(labels.size());
  std::copy(labels.begin(), labels.end(), out.mutable_data());
  return out;
}

std::span<const std::uint32_t> as_span(const LabelArray& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

data::TimeSeriesDataset to_dataset(const FloatArray& samples, std::size_t num_classes) {
  if (samples.ndim() != 3) throw py::value_error("samples must have shape (N, C, L)");
  const auto n = static_cast<std::size_t>(samples.shape(0));
  std::vector<float> values(samples.data(), samples.data() + samples.size());
  return data::TimeSeriesDataset(std::move(values), std::vector<std::uint32_t>(n, 0),
                                 static_cast<std::size_t>(samples.shape(1)),
                                 static_cast<std::size_t>(samples.shape(2)), num_classes,
                                 data::Split::kTrain);
}

analytic::LabelBlock label_block(const LabelArray& labels, const std::vector<std::uint32_t>& classes) {
  return analytic::LabelBlock::from_labels(as_span(labels), classes);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient-free class-incremental learning for time series (C++ core)";

  static py::exception<Error> py_error(m, "TsaclError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(py_error, (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "generate_synthetic",
      [](std::size_t num_classes, std::size_t subjects_per_class, std::size_t samples_per_subject,
         std::size_t test_samples_per_subject, std::size_t channels, std::size_t length,
         std::uint64_t template_seed, double subject_scale, double noise_scale,
         std::uint64_t seed) {
        data::SyntheticSpec spec{num_classes, subjects_per_class, samples_per_subject,
                                 test_samples_per_subject, channels, length, template_seed,
                                 subject_scale, noise_scale, seed};
        const auto pair = data::generate_synthetic(spec);
        return py::make_tuple(samples_array(pair.train), labels_array(pair.train.labels()),
                              samples_array(pair.test), labels_array(pair.test.labels()));
      },
      py::arg("num_classes") = 8, py::arg("subjects_per_class") = 4,
      py::arg("samples_per_subject") = 50, py::arg("test_samples_per_subject") = 25,
      py::arg("channels") = 3, py::arg("length") = 64, py::arg("template_seed") = 0,
      py::arg("subject_scale") = 1.0, py::arg("noise_scale") = 0.1, py::arg("seed") = 0,
      "Returns (train_samples, train_labels, test_samples, test_labels).");

  m.def(
      "build_task_stream",
      [](const LabelArray& train_labels, const LabelArray& test_labels, std::size_t num_classes,
         std::size_t classes_per_task, std::uint64_t seed) {
        const auto stream = data::build_task_stream(as_span(train_labels), as_span(test_labels),
                                                    num_classes, classes_per_task, seed);
        py::list tasks;
        for (const auto& t : stream.tasks) {
          py::dict d;
          d["classes"] = t.classes;
          d["train_indices"] = t.train_indices;
          d["test_indices"] = t.test_indices;
          tasks.append(d);
        }
        return tasks;
      },
      py::arg("train_labels"), py::arg("test_labels"), py::arg("num_classes"),
      py::arg("classes_per_task"), py::arg("seed"));

  py::class_<encoder::RandomEncoder>(m, "RandomEncoder")
      .def(py::init([](std::size_t in_channels,
                       const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>& blocks,
                       std::uint64_t seed, std::optional<std::vector<std::size_t>> include_layers) {
             auto spec = encoder::EncoderSpec::desk_default(in_channels, seed);
             if (!blocks.empty()) {
               spec.blocks.clear();
               spec.include_layers.clear();
               for (const auto& [c, k, p] : blocks) {
                 spec.include_layers.push_back(spec.blocks.size());
                 spec.blocks.push_back({c, k, p});
               }
             }
             if (include_layers) spec.include_layers = *include_layers;
             return encoder::RandomEncoder(spec);
           }),
           py::arg("in_channels"),
           py::arg("blocks") = std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>{},
           py::arg("seed") = 0, py::arg("include_layers") = py::none(),
           "blocks: list of (out_channels, kernel_size, pool); empty selects the default four blocks.")
      .def_property_readonly("feature_dim", [](const encoder::RandomEncoder& e) {
        return e.spec().feature_dim();
      })
      .def(
          "encode",
          [](const encoder::RandomEncoder& e, const FloatArray& samples,
             const std::string& normalization) {
            const auto dataset = to_dataset(samples, 1);
            return encoder::FeatureMatrix(
                e.encode(dataset, encoder::parse_normalization(normalization)).matrix);
          },
          py::arg("samples"), py::arg("normalization") = "none");

  m.def(
      "init_rhl",
      [](std::size_t d_stack, std::size_t d_expanded, std::uint64_t seed,
         std::optional<double> scale) {
        return expansion::init_rhl(d_stack, d_expanded, seed, scale).weights;
      },
      py::arg("d_stack"), py::arg("d_expanded"), py::arg("seed"), py::arg("scale") = py::none());

  m.def(
      "expand",
      [](const Eigen::MatrixXd& features, const Eigen::MatrixXd& weights, bool standardize) {
        expansion::RhlProjection rhl;
        rhl.weights = weights;
        return expansion::expand(features, rhl, standardize);
      },
      py::arg("features"), py::arg("weights"), py::arg("standardize_rows") = false);

  py::class_<analytic::AnalyticClassifier>(m, "AnalyticClassifier")
      .def_static(
          "fit_initial",
          [](const Eigen::MatrixXd& embeddings, const LabelArray& labels,
             const std::vector<std::uint32_t>& classes, double gamma) {
            return analytic::fit_initial(embeddings, label_block(labels, classes), gamma);
          },
          py::arg("embeddings"), py::arg("labels"), py::arg("classes"), py::arg("gamma"))
      .def(
          "update",
          [](analytic::AnalyticClassifier& c, const Eigen::MatrixXd& embeddings,
             const LabelArray& labels, const std::vector<std::uint32_t>& classes,
             std::size_t chunk_size) {
            c.update(embeddings, label_block(labels, classes), chunk_size);
          },
          py::arg("embeddings"), py::arg("labels"), py::arg("classes"),
          py::arg("chunk_size") = analytic::kDefaultChunkSize)
      .def("predict_scores", &analytic::AnalyticClassifier::predict_scores)
      .def("predict_labels", &analytic::AnalyticClassifier::predict_labels)
      .def_property_readonly("weights", &analytic::AnalyticClassifier::weights)
      .def_property_readonly("psi", &analytic::AnalyticClassifier::inverse_correlation)
      .def_property_readonly("gamma", &analytic::AnalyticClassifier::gamma)
      .def_property_readonly("registry", &analytic::AnalyticClassifier::registry)
      .def_property_readonly("tasks_seen", &analytic::AnalyticClassifier::tasks_seen);

  m.def(
      "block_diagonal_labels",
      [](const std::vector<std::pair<LabelArray, std::vector<std::uint32_t>>>& tasks) {
        std::vector<analytic::LabelBlock> blocks;
        for (const auto& [labels, classes] : tasks) blocks.push_back(label_block(labels, classes));
        return analytic::block_diagonal_labels(blocks);
      },
      py::arg("tasks"), "tasks: list of (labels, classes) pairs in task order.");
  m.def("joint_fit_oracle", &analytic::joint_fit_oracle, py::arg("embeddings"),
        py::arg("labels"), py::arg("gamma"));
  m.def("woodbury_check", &analytic::woodbury_check, py::arg("a"), py::arg("u"), py::arg("c"),
        py::arg("v"));

  m.def("softmax", [](const Eigen::RowVectorXd& scores) { return ensemble::softmax(scores); });

  m.def("task_accuracy", [](const LabelArray& predictions, const LabelArray& truth) {
    return metrics::task_accuracy(as_span(predictions), as_span(truth));
  });
  const auto to_matrix = [](const std::vector<std::vector<double>>& rows) {
    metrics::AccuracyMatrix matrix;
    for (const auto& r : rows) matrix.push_row(r);
    return matrix;
  };
  m.def("average_accuracy", [to_matrix](const std::vector<std::vector<double>>& rows,
                                        std::size_t t) {
    return metrics::average_accuracy(to_matrix(rows), t);
  });
  m.def("forgetting", [to_matrix](const std::vector<std::vector<double>>& rows, std::size_t t) {
    return metrics::forgetting(to_matrix(rows), t);
  });
  m.def("variance_ratio", [](const Eigen::MatrixXd& features, const LabelArray& labels) {
    return metrics::variance_ratio(features, as_span(labels)).value();
  });

  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        const auto config = experiment::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        py::gil_scoped_release release;
        return experiment::run_experiment(config).to_json().dump();
      },
      py::arg("config_json"));
  m.def(
      "read_checkpoint_header",
      [](const std::string& path) { return checkpoint::read_header(path).dump(); },
      py::arg("path"));

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
