#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "pcgc/bytes.hpp"
#include "pcgc/codec.hpp"
#include "pcgc/error.hpp"
#include "pcgc/trainer.hpp"

namespace py = pybind11;
using namespace pcgc;

namespace {

using VoxelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;
using PointArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

VoxelArray voxels_to_array(const std::vector<Voxel>& points) {
  VoxelArray out({static_cast<py::ssize_t>(points.size()), py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int k = 0; k < 3; ++k) v(i, k) = points[i][k];
  return out;
}

std::vector<Voxel> array_to_voxels(const VoxelArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw DataError("points must have shape (n, 3)");
  auto v = a.unchecked<2>();
  std::vector<Voxel> out(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {v(i, 0), v(i, 1), v(i, 2)};
  return out;
}

PointArray raw_to_array(const RawCloud& cloud) {
  PointArray out({static_cast<py::ssize_t>(cloud.points.size()), py::ssize_t{3}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    for (int k = 0; k < 3; ++k) v(i, k) = cloud.points[i][k];
  return out;
}

RawCloud array_to_raw(const PointArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw DataError("points must have shape (n, 3)");
  auto v = a.unchecked<2>();
  RawCloud out;
  out.points.resize(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i] = {v(i, 0), v(i, 1), v(i, 2)};
  return out;
}

py::bytes to_py_bytes(const std::vector<std::uint8_t>& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

std::span<const std::uint8_t> view(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

CodecModels load_models(const std::filesystem::path& model, const std::optional<std::filesystem::path>& acnp) {
  const std::string m = read_file(model);
  if (!acnp) return CodecModels::from_checkpoints(view(m));
  const std::string a = read_file(*acnp);
  return CodecModels::from_checkpoints(view(m), view(a));
}

std::vector<NamedCloud> named(const std::vector<QuantizedCloud>& clouds) {
  std::vector<NamedCloud> out;
  for (std::size_t i = 0; i < clouds.size(); ++i) out.push_back({"cloud-" + std::to_string(i), clouds[i]});
  return out;
}

}  // namespace

PYBIND11_MODULE(_pcgc, m) {
  m.doc() = "Lossless octree point-cloud geometry codec";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<VerificationError>(m, "VerificationError", PyExc_RuntimeError);

  py::class_<QuantizedCloud>(m, "QuantizedCloud")
      .def(py::init<>())
      .def(py::init([](const VoxelArray& points, int depth, std::array<double, 3> origin, double scale) {
             QuantizedCloud c;
             c.depth = depth;
             c.points = array_to_voxels(points);
             c.origin = origin;
             c.scale = scale;
             return c;
           }),
           py::arg("points"), py::arg("depth"), py::arg("origin") = std::array<double, 3>{0.0, 0.0, 0.0},
           py::arg("scale") = 1.0)
      .def_readwrite("depth", &QuantizedCloud::depth)
      .def_readwrite("origin", &QuantizedCloud::origin)
      .def_readwrite("scale", &QuantizedCloud::scale)
      .def_property(
          "points", [](const QuantizedCloud& c) { return voxels_to_array(c.points); },
          [](QuantizedCloud& c, const VoxelArray& a) { c.points = array_to_voxels(a); })
      .def("__len__", [](const QuantizedCloud& c) { return c.points.size(); })
      .def("__eq__", [](const QuantizedCloud& a, const QuantizedCloud& b) { return a == b; })
      .def("__repr__", [](const QuantizedCloud& c) {
        return "QuantizedCloud(points=" + std::to_string(c.points.size()) + ", depth=" + std::to_string(c.depth) +
               ")";
      });

  m.def(
      "quantize", [](const PointArray& points, int depth) { return quantize(array_to_raw(points), depth); },
      py::arg("points"), py::arg("depth"));
  m.def("dequantize", [](const QuantizedCloud& c) { return raw_to_array(dequantize(c)); });
  m.def("read_ply", [](const std::filesystem::path& p) { return raw_to_array(read_ply(p)); });
  m.def("read_quantized", &read_quantized);
  m.def("write_quantized", &write_quantized);
  m.def(
      "generate_cloud",
      [](const std::string& kind, std::size_t points, int depth, std::uint64_t seed) {
        return generate_cloud(SyntheticSpec{parse_cloud_kind(kind), points, depth, seed});
      },
      py::arg("kind"), py::arg("points") = 5000, py::arg("depth") = 6, py::arg("seed") = 1);

  py::class_<CodecModels>(m, "CodecModels")
      .def_static("load", &load_models, py::arg("model"), py::arg("acnp") = std::nullopt)
      .def_static(
          "from_bytes",
          [](py::bytes model, std::optional<py::bytes> acnp) {
            const std::string m = model;
            if (!acnp) return CodecModels::from_checkpoints(view(m));
            const std::string a = *acnp;
            return CodecModels::from_checkpoints(view(m), view(a));
          },
          py::arg("model"), py::arg("acnp") = std::nullopt)
      .def_property_readonly("kind",
                             [](const CodecModels& c) {
                               return std::string(c.kind() == CodecModelKind::Acnp ? "acnp" : "baseline");
                             })
      .def_property_readonly("digest", [](const CodecModels& c) { return to_hex(c.digest()); })
      .def_property_readonly("ancestors", [](const CodecModels& c) { return c.context().ancestors; })
      .def_property_readonly("window", [](const CodecModels& c) { return c.context().window; });

  m.def(
      "encode",
      [](const QuantizedCloud& c, const CodecModels& models) {
        return to_py_bytes(serialize_container(encode_cloud(c, models)));
      },
      py::arg("cloud"), py::arg("models"));
  m.def(
      "encode_with_stats",
      [](const QuantizedCloud& c, const CodecModels& models) {
        const auto r = encode_cloud_with_stats(c, models);
        py::dict stats;
        stats["points"] = r.stats.points;
        stats["nodes"] = r.stats.nodes;
        stats["model_bits"] = r.stats.model_bits;
        stats["quantized_bits"] = r.stats.quantized_bits;
        stats["payload_bits"] = r.stats.payload_bits;
        stats["header_bits"] = r.stats.header_bits;
        stats["bpip"] = bpip(r.compressed, c.points.size());
        return py::make_tuple(to_py_bytes(serialize_container(r.compressed)), stats);
      },
      py::arg("cloud"), py::arg("models"));
  m.def(
      "decode",
      [](py::bytes data, const CodecModels& models) {
        const std::string s = data;
        return decode_cloud(parse_container(view(s)), models);
      },
      py::arg("data"), py::arg("models"));

  m.def(
      "train_acnp",
      [](const std::vector<QuantizedCloud>& clouds, int epochs, double lr, std::size_t batch, std::uint64_t seed,
         int ancestors, int window) {
        TrainConfig tc = acnp_defaults();
        tc.epochs = epochs;
        tc.lr = lr;
        tc.batch = batch;
        tc.seed = seed;
        tc.context = {ancestors, window};
        AcnpConfig ac;
        ac.context = tc.context;
        std::string ckpt;
        {
          py::gil_scoped_release release;
          const auto r = train_acnp(collect_samples(named(clouds), tc.context), tc, ac);
          ckpt = nn::serialize_checkpoint(r.model.to_checkpoint());
        }
        return py::bytes(ckpt);
      },
      py::arg("clouds"), py::arg("epochs") = 20, py::arg("lr") = 1e-3, py::arg("batch") = 256, py::arg("seed") = 1,
      py::arg("ancestors") = 4, py::arg("window") = 0,
      "Trains the child-count predictor and returns its checkpoint bytes.");
  m.def(
      "train_model",
      [](const std::vector<QuantizedCloud>& clouds, int epochs, double lr, std::size_t batch, std::uint64_t seed,
         int ancestors, int window, std::optional<py::bytes> acnp) {
        TrainConfig tc = window > 0 ? window_model_defaults() : ancestor_model_defaults();
        tc.epochs = epochs;
        tc.lr = lr;
        tc.batch = batch;
        tc.seed = seed;
        tc.context = {ancestors, window};
        ContextModelConfig mc;
        mc.context = tc.context;
        std::optional<AcnpModel> frozen;
        if (acnp) {
          const std::string a = *acnp;
          frozen = AcnpModel::from_checkpoint(nn::parse_checkpoint(view(a)));
          mc.enhanced = true;
        }
        std::string ckpt;
        {
          py::gil_scoped_release release;
          const NumberFeed feed = frozen ? NumberFeed{NumberSource::Acnp, &*frozen} : NumberFeed{};
          const auto r = train_context_model(collect_samples(named(clouds), tc.context), tc, mc, feed);
          ckpt = nn::serialize_checkpoint(r.model.to_checkpoint());
        }
        return py::bytes(ckpt);
      },
      py::arg("clouds"), py::arg("epochs") = 40, py::arg("lr") = 1e-3, py::arg("batch") = 256, py::arg("seed") = 1,
      py::arg("ancestors") = 4, py::arg("window") = 0, py::arg("acnp") = std::nullopt,
      "Trains the context model (ACNP-enhanced when `acnp` is given) and returns its checkpoint bytes.");

  m.def("gaussian_center", &gaussian_center, py::arg("n_hat"));
  m.def("gaussian_map", &gaussian_map, py::arg("n_hat"), py::arg("sigma") = 1.0);
  m.def("number_vector", &number_vector, py::arg("gaussian"));

  m.def("demo_ce_paradox", [] {
    const auto r = demo_ce_paradox();
    py::dict d;
    d["label"] = r.label;
    d["dist_a"] = r.dist_a;
    d["dist_b"] = r.dist_b;
    d["loss_a"] = r.loss_a;
    d["loss_b"] = r.loss_b;
    d["expected_count_a"] = r.expected_count_a;
    d["expected_count_b"] = r.expected_count_b;
    d["count_error_a"] = r.count_error_a;
    d["count_error_b"] = r.count_error_b;
    d["text"] = r.to_text();
    return d;
  });
}
