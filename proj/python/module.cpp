#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "degrade/adapter.hpp"
#include "degrade/augment.hpp"
#include "degrade/image.hpp"
#include "degrade/metrics.hpp"
#include "degrade/ops.hpp"

namespace py = pybind11;
using namespace degrade;

namespace {

Image image_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3) {
        throw py::value_error("expected an array of shape (height, width, 3)");
    }
    const int height = static_cast<int>(arr.shape(0));
    const int width = static_cast<int>(arr.shape(1));
    std::vector<std::uint8_t> data(arr.data(), arr.data() + arr.size());
    return Image(width, height, std::move(data));
}

py::array_t<std::uint8_t> array_from_image(const Image& img) {
    py::array_t<std::uint8_t> arr({img.height(), img.width(), 3});
    std::memcpy(arr.mutable_data(), img.data(), img.sample_count());
    return arr;
}

std::vector<metrics::PredictionRecord> records_from_arrays(const std::vector<int>& labels,
                                                           const std::vector<double>& scores) {
    if (labels.size() != scores.size()) {
        throw py::value_error("labels and scores must have equal length");
    }
    std::vector<metrics::PredictionRecord> records(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        records[i].item_id = std::to_string(i);
        records[i].cell = metrics::CellRef::make_unaltered();
        records[i].label = labels[i] ? Label::fake : Label::real;
        records[i].score = scores[i];
    }
    return records;
}

py::list draw_to_pylist(const augment::ChainDraw& draw) {
    py::module_ json_mod = py::module_::import("json");
    return json_mod.attr("loads")(augment::serialize_draw(draw));
}

}  // namespace

PYBIND11_MODULE(_degrade, m) {
    m.doc() = "Image degradation operations, augmentation chain and detection metrics";

    py::register_exception<Error>(m, "DegradeError");

    // image transforms: numpy (h, w, 3) uint8 in, same shape out
    m.def("jpeg_transcode",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             int quality) { return array_from_image(ops::jpeg_transcode(image_from_array(arr), quality)); },
          py::arg("image"), py::arg("quality"));
    m.def("gaussian_blur",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             int kernel) { return array_from_image(ops::gaussian_blur(image_from_array(arr), kernel)); },
          py::arg("image"), py::arg("kernel"));
    m.def("median_filter",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             int kernel) { return array_from_image(ops::median_filter(image_from_array(arr), kernel)); },
          py::arg("image"), py::arg("kernel"));
    m.def("average_filter",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             int kernel) { return array_from_image(ops::average_filter(image_from_array(arr), kernel)); },
          py::arg("image"), py::arg("kernel"));
    m.def("awgn",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             double sigma, std::uint64_t seed) {
              return array_from_image(ops::awgn(image_from_array(arr), sigma, seed));
          },
          py::arg("image"), py::arg("sigma"), py::arg("seed"));
    m.def("poisson_gaussian_noise",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             double a, double b, std::uint64_t seed) {
              return array_from_image(ops::poisson_gaussian_noise(image_from_array(arr), a, b, seed));
          },
          py::arg("image"), py::arg("a"), py::arg("b"), py::arg("seed"));
    m.def("linear_adjust",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             double alpha, double beta) {
              return array_from_image(ops::linear_adjust(image_from_array(arr), alpha, beta));
          },
          py::arg("image"), py::arg("alpha"), py::arg("beta"));
    m.def("contrast_about_mean",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             double alpha) {
              return array_from_image(ops::contrast_about_mean(image_from_array(arr), alpha));
          },
          py::arg("image"), py::arg("alpha"));
    m.def("gamma_correct",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             double gamma) {
              return array_from_image(ops::gamma_correct(image_from_array(arr), gamma));
          },
          py::arg("image"), py::arg("gamma"));
    m.def("downscale",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             int factor) { return array_from_image(ops::downscale(image_from_array(arr), factor)); },
          py::arg("image"), py::arg("factor"));
    m.def("mse",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
             const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& b) {
              return mse(image_from_array(a), image_from_array(b));
          },
          py::arg("a"), py::arg("b"));
    m.def("mock_score",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr) {
              return adapter::mock_score(image_from_array(arr));
          },
          py::arg("image"));

    // metrics over parallel label/score sequences (label: 0 = real, 1 = fake)
    m.def("auc",
          [](const std::vector<int>& labels, const std::vector<double>& scores) {
              return metrics::auc(records_from_arrays(labels, scores));
          },
          py::arg("labels"), py::arg("scores"));
    m.def("accuracy",
          [](const std::vector<int>& labels, const std::vector<double>& scores, double threshold) {
              return metrics::accuracy(records_from_arrays(labels, scores), threshold);
          },
          py::arg("labels"), py::arg("scores"), py::arg("threshold") = 0.5);
    m.def("f1",
          [](const std::vector<int>& labels, const std::vector<double>& scores, double threshold) {
              return metrics::f1(records_from_arrays(labels, scores), threshold);
          },
          py::arg("labels"), py::arg("scores"), py::arg("threshold") = 0.5);

    // augmentation chain
    py::class_<augment::AugmentationChainConfig>(m, "ChainConfig")
        .def(py::init<>())
        .def_readwrite("p_enhance", &augment::AugmentationChainConfig::p_enhance)
        .def_readwrite("enhance_factor_range", &augment::AugmentationChainConfig::enhance_factor_range)
        .def_readwrite("p_smooth", &augment::AugmentationChainConfig::p_smooth)
        .def_readwrite("smooth_kernel_range", &augment::AugmentationChainConfig::smooth_kernel_range)
        .def_readwrite("p_noise", &augment::AugmentationChainConfig::p_noise)
        .def_readwrite("noise_sigma_range", &augment::AugmentationChainConfig::noise_sigma_range)
        .def_readwrite("p_jpeg", &augment::AugmentationChainConfig::p_jpeg)
        .def_readwrite("jpeg_quality_range", &augment::AugmentationChainConfig::jpeg_quality_range)
        .def_readwrite("seed", &augment::AugmentationChainConfig::seed);

    m.def("sample_chain",
          [](const augment::AugmentationChainConfig& cfg, std::uint64_t draw_key) {
              return draw_to_pylist(augment::sample_chain(cfg, draw_key));
          },
          py::arg("config"), py::arg("draw_key"),
          "Concrete steps for one draw, as a list of dicts.");
    m.def("apply_chain",
          [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& arr,
             const augment::AugmentationChainConfig& cfg, std::uint64_t draw_key) {
              return array_from_image(augment::apply_chain(image_from_array(arr), cfg, draw_key));
          },
          py::arg("image"), py::arg("config"), py::arg("draw_key"));

    m.attr("__version__") = "0.1.0";
}
