#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gazecast/dataset.hpp"
#include "gazecast/errors.hpp"
#include "gazecast/evaluation.hpp"
#include "gazecast/geometry.hpp"
#include "gazecast/models.hpp"
#include "gazecast/saliency.hpp"
#include "gazecast/training.hpp"

namespace py = pybind11;
using namespace gazecast;

namespace {

SaliencyMap map_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("saliency map must be 2-D");
    SaliencyMap map;
    map.height = static_cast<int>(arr.shape(0));
    map.width = static_cast<int>(arr.shape(1));
    map.values.assign(arr.data(), arr.data() + arr.size());
    return map;
}

py::array_t<float> map_to_array(const SaliencyMap& map) {
    py::array_t<float> arr({map.height, map.width});
    std::copy(map.values.begin(), map.values.end(), arr.mutable_data());
    return arr;
}

Frame frame_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    Frame f;
    if (arr.ndim() == 2) {
        f.channels = 1;
    } else if (arr.ndim() == 3 && (arr.shape(2) == 1 || arr.shape(2) == 3)) {
        f.channels = static_cast<int>(arr.shape(2));
    } else {
        throw std::invalid_argument("frame must be HxW or HxWx{1,3}");
    }
    f.height = static_cast<int>(arr.shape(0));
    f.width = static_cast<int>(arr.shape(1));
    f.pixels.assign(arr.data(), arr.data() + arr.size());
    return f;
}

template <typename T>
py::array_t<T> mat_to_array(const Mat<T>& m) {
    py::array_t<T> arr({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), arr.mutable_data());
    return arr;
}

MatF mat_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    MatF m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
    return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gaze forecasting core: spherical angle math, saliency features, "
              "window sampling, and sequence models";

    py::register_exception<ParseError>(m, "DataError");
    py::register_exception<NumericError>(m, "NumericFailure");

    py::class_<HeadPose>(m, "HeadPose")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("azimuth_deg"), py::arg("elevation_deg"))
        .def_readwrite("azimuth_deg", &HeadPose::azimuth_deg)
        .def_readwrite("elevation_deg", &HeadPose::elevation_deg)
        .def("__repr__", [](const HeadPose& p) {
            return "HeadPose(az=" + std::to_string(p.azimuth_deg) +
                   ", el=" + std::to_string(p.elevation_deg) + ")";
        });

    py::class_<GazeOffset>(m, "GazeOffset")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("d_az_deg"), py::arg("d_el_deg"))
        .def_readwrite("d_az_deg", &GazeOffset::d_az_deg)
        .def_readwrite("d_el_deg", &GazeOffset::d_el_deg);

    py::class_<MotionFeatures>(m, "MotionFeatures")
        .def_readonly("w_az", &MotionFeatures::w_az)
        .def_readonly("w_el", &MotionFeatures::w_el)
        .def_readonly("d_az", &MotionFeatures::d_az)
        .def_readonly("d_el", &MotionFeatures::d_el);

    m.def("wrap_angle", &wrap_angle, py::arg("delta_deg"),
          "Normalize a degree angle into [-180, 180]");
    m.def("gaze_offset", &gaze_offset, py::arg("gt"), py::arg("hmd_ref"));
    m.def("motion_features", &motion_features, py::arg("curr"), py::arg("prev"), py::arg("dt"));
    m.def("angular_loss", &angular_loss, py::arg("pred"), py::arg("truth"));
    m.def("spherical_mse", &spherical_mse, py::arg("pred"), py::arg("truth"));
    m.def(
        "spherical_rmse",
        [](const std::vector<GazeOffset>& preds, const std::vector<GazeOffset>& truths) {
            SphericalRmse r = spherical_rmse(preds, truths);
            return py::make_tuple(r.az, r.el, r.combined);
        },
        py::arg("preds"), py::arg("truths"),
        "Returns (rmse_az, rmse_el, rmse_combined)");

    m.def(
        "valid_indices",
        [](int frame_count, int p, int q, int step, int segment_len, bool segmented) {
            WindowConfig cfg;
            cfg.past = p;
            cfg.horizon = q;
            cfg.step = step;
            cfg.segment_len = segment_len;
            cfg.segmented = segmented;
            return valid_indices(frame_count, cfg);
        },
        py::arg("frame_count"), py::arg("p") = 15, py::arg("q") = 10, py::arg("step") = 5,
        py::arg("segment_len") = 150, py::arg("segmented") = false,
        "0-based window anchors for a session of the given length");

    m.def(
        "center_bias",
        [](int width, int height) { return map_to_array(center_bias_map(width, height)); },
        py::arg("width"), py::arg("height"));
    m.def(
        "spectral_residual",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> frame) {
            return map_to_array(spectral_residual(frame_from_array(frame)));
        },
        py::arg("frame"));
    m.def(
        "preprocess",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> frame, int width,
           int height) {
            Frame out = preprocess(frame_from_array(frame), width, height);
            if (out.channels == 1) {
                py::array_t<float> arr({out.height, out.width});
                std::copy(out.pixels.begin(), out.pixels.end(), arr.mutable_data());
                return py::array(arr);
            }
            py::array_t<float> arr({out.height, out.width, out.channels});
            std::copy(out.pixels.begin(), out.pixels.end(), arr.mutable_data());
            return py::array(arr);
        },
        py::arg("frame"), py::arg("width") = 384, py::arg("height") = 288);
    m.def(
        "pool_flatten",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> map, int grid_rows,
           int grid_cols, const std::string& mode) {
            PoolSpec spec;
            spec.grid_rows = grid_rows;
            spec.grid_cols = grid_cols;
            spec.mode = mode == "max" ? PoolSpec::Mode::Max : PoolSpec::Mode::Mean;
            return pool_flatten(map_from_array(std::move(map)), spec);
        },
        py::arg("map"), py::arg("grid_rows") = 9, py::arg("grid_cols") = 12,
        py::arg("mode") = "mean");
    m.def(
        "write_smap",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> map,
           const std::string& path) { write_smap(map_from_array(std::move(map)), path); },
        py::arg("map"), py::arg("path"));
    m.def(
        "read_smap", [](const std::string& path) { return map_to_array(read_smap(path)); },
        py::arg("path"));

    py::class_<ParamSetF>(m, "Model")
        .def_property_readonly("arch", [](const ParamSetF& p) { return arch_name(p.arch); })
        .def_property_readonly("p", [](const ParamSetF& p) { return p.dims.past; })
        .def_property_readonly("q", [](const ParamSetF& p) { return p.dims.horizon; })
        .def_property_readonly("input_dim", [](const ParamSetF& p) { return p.dims.input_dim; })
        .def_property_readonly("hidden", [](const ParamSetF& p) { return p.dims.hidden; })
        .def(
            "predict",
            [](const ParamSetF& p,
               py::array_t<float, py::array::c_style | py::array::forcecast> window) {
                return mat_to_array(predict(p, mat_from_array(std::move(window))));
            },
            py::arg("window"), "Forward a p x (F+4) fused window to q x 2 offsets")
        .def(
            "save", [](const ParamSetF& p, const std::string& path) { save_checkpoint(p, path); },
            py::arg("path"));

    m.def(
        "init_model",
        [](const std::string& arch, int input_dim, int hidden, int p, int q, int blocks,
           uint64_t seed) {
            ModelDims dims;
            dims.input_dim = input_dim;
            dims.hidden = hidden;
            dims.past = p;
            dims.horizon = q;
            dims.blocks = blocks;
            return init_params<float>(arch_from_name(arch), dims, seed);
        },
        py::arg("arch"), py::arg("input_dim"), py::arg("hidden") = 128, py::arg("p") = 15,
        py::arg("q") = 10, py::arg("blocks") = 2, py::arg("seed") = 0);
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("model"), py::arg("path"));
}
