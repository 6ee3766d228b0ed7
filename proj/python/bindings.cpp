// Copyright 2026 The hoptex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <limits>

#include "hoptex/error.hpp"
#include "hoptex/image_io.hpp"
#include "hoptex/pipeline.hpp"
#include "hoptex/quilting.hpp"
#include "hoptex/serialize.hpp"
#include "hoptex/size_audit.hpp"

namespace py = pybind11;
using namespace hoptex;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image image_from_array(const U8Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw ArgumentError("image array must be HxW or HxWxC");
  Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
            a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1);
  std::memcpy(img.data.data(), a.data(), img.data.size());
  img.validate();
  return img;
}

U8Array image_to_array(const Image& img) {
  U8Array out({img.height, img.width, img.channels});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size());
  return out;
}

F64Array tensors_to_array(const std::vector<PatchTensor>& ts, int h, int w, int c) {
  F64Array out({static_cast<py::ssize_t>(ts.size()), static_cast<py::ssize_t>(h), static_cast<py::ssize_t>(w),
                static_cast<py::ssize_t>(c)});
  double* dst = out.mutable_data();
  for (const auto& t : ts) dst = std::copy(t.data.begin(), t.data.end(), dst);
  return out;
}

std::vector<PatchTensor> array_to_tensors(const F64Array& a) {
  if (a.ndim() != 4) throw ArgumentError("patch array must be N x P x P x C");
  std::vector<PatchTensor> out;
  const double* src = a.data();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    PatchTensor t(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)));
    std::copy(src, src + t.size(), t.data.begin());
    src += t.size();
    out.push_back(std::move(t));
  }
  return out;
}

py::dict report_dict(const SizeReport& r) {
  py::list components;
  for (const auto& c : r.components) {
    py::dict d;
    d["name"] = c.name;
    d["equation"] = c.equation;
    d["closed_form"] = c.closed_form;
    d["walked"] = c.walked;
    components.append(d);
  }
  py::dict out;
  out["components"] = components;
  out["total_closed_form"] = r.closed_form_total();
  out["total_walked"] = r.walked_total();
  out["agrees"] = r.agrees();
  return out;
}

TextureModel train_py(const U8Array& exemplar, int patch_size, int stride, std::size_t random_crops,
                      const std::string& k1, const std::string& k2, double gamma, int clusters, int codebook,
                      double whitening_energy, std::optional<double> rejection_threshold, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.patch_size = patch_size;
  if (random_crops > 0)
    cfg.crop = RandomCrop{random_crops, 0};
  else
    cfg.crop = StridedCrop{stride};
  const ChainConfig defaults = ChainConfig::defaults();
  cfg.chain.hops[0].rule = parse_channel_rule(k1, std::get<EnergyKnee>(defaults.hops[0].rule));
  cfg.chain.hops[1].rule = parse_channel_rule(k2, std::get<EnergyKnee>(defaults.hops[1].rule));
  cfg.gamma = gamma;
  cfg.core.clusters = clusters;
  cfg.core.codebook_size = codebook;
  cfg.core.whitening_energy = whitening_energy;
  if (rejection_threshold) cfg.core.rejection_threshold = *rejection_threshold;
  cfg.seed = seed;
  const Image img = image_from_array(exemplar);
  py::gil_scoped_release release;
  return train(img, cfg);
}

}  // namespace

PYBIND11_MODULE(_hoptex, m) {
  m.doc() = "hoptex native extension";

  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<SamplingError>(m, "SamplingError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ArgumentError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("load_image", [](const std::filesystem::path& p) { return image_to_array(load_image(p)); },
        py::arg("path"), "Read a PNG as an HxWxC uint8 array.");
  m.def("save_image", [](const U8Array& a, const std::filesystem::path& p) { save_image(image_from_array(a), p); },
        py::arg("image"), py::arg("path"));

  m.def(
      "extract_patches",
      [](const U8Array& a, int patch_size, int stride, std::size_t random_crops, std::uint64_t seed) {
        const Image img = image_from_array(a);
        CropMode mode = StridedCrop{stride};
        if (random_crops > 0) mode = RandomCrop{random_crops, seed};
        return tensors_to_array(extract_patches(img, patch_size, mode), patch_size, patch_size, img.channels);
      },
      py::arg("image"), py::arg("patch_size") = 32, py::arg("stride") = 2, py::arg("random_crops") = 0,
      py::arg("seed") = 0, "Crop patches as an N x P x P x C float64 array.");

  py::class_<TextureModel>(m, "TextureModel")
      .def_property_readonly("shape_chain",
                             [](const TextureModel& t) {
                               std::vector<std::tuple<int, int, int>> out;
                               for (const auto& s : t.chain.shapes) out.emplace_back(s.height, s.width, s.channels);
                               return out;
                             })
      .def_property_readonly("dims",
                             [](const TextureModel& t) {
                               py::dict d;
                               d["hop_channels"] = t.declared.hop_channels;
                               d["reduced_dim"] = t.declared.reduced_dim;
                               d["clusters"] = t.declared.clusters;
                               d["cdfs"] = t.declared.cdfs;
                               d["codewords"] = t.declared.codewords;
                               return d;
                             })
      .def_property_readonly("training_patches", [](const TextureModel& t) { return t.provenance.training_patches; })
      .def_readonly("analysis_seconds", &TextureModel::analysis_seconds)
      .def(
          "generate_patches",
          [](const TextureModel& t, std::size_t count, std::uint64_t seed, int threads) {
            std::vector<PatchTensor> ps;
            {
              py::gil_scoped_release release;
              ps = generate_patches(t, count, seed, threads);
            }
            const auto& in = t.chain.shapes.front();
            return tensors_to_array(ps, in.height, in.width, in.channels);
          },
          py::arg("count"), py::arg("seed") = 0, py::arg("threads") = 1)
      .def(
          "reconstruct",
          [](const TextureModel& t, const F64Array& patches) {
            auto ts = array_to_tensors(patches);
            for (auto& x : ts) x = reconstruct(t.chain, x);
            const auto& in = t.chain.shapes.front();
            return tensors_to_array(ts, in.height, in.width, in.channels);
          },
          py::arg("patches"), "Forward then inverse transform through the fitted chain.")
      .def("size_report", [](const TextureModel& t) { return report_dict(audit_size(t)); })
      .def("to_bytes",
           [](const TextureModel& t) {
             const auto bytes = serialize(t);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_static("from_bytes",
                  [](const py::bytes& b) {
                    const std::string s = b;
                    return deserialize(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def("save", [](const TextureModel& t, const std::filesystem::path& p) { save_model(t, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); });

  m.def("train", &train_py, py::arg("exemplar"), py::arg("patch_size") = 32, py::arg("stride") = 2,
        py::arg("random_crops") = 0, py::arg("k1") = "knee", py::arg("k2") = "knee", py::arg("gamma") = 0.01,
        py::arg("clusters") = 50, py::arg("codebook") = 200, py::arg("whitening_energy") = 0.99,
        py::arg("rejection_threshold") = py::none(), py::arg("seed") = 0,
        "Fit a texture model to an HxWx3 uint8 exemplar.");

  m.def(
      "quilt",
      [](const F64Array& patches, int height, int width, int overlap, double tolerance, std::uint64_t seed) {
        const auto ts = array_to_tensors(patches);
        QuiltConfig cfg;
        cfg.out_height = height;
        cfg.out_width = width;
        cfg.overlap = overlap;
        cfg.tolerance = tolerance;
        cfg.seed = seed;
        Image img;
        {
          py::gil_scoped_release release;
          img = quilt(ts, cfg);
        }
        return image_to_array(img);
      },
      py::arg("patches"), py::arg("height") = 256, py::arg("width") = 256, py::arg("overlap") = 0,
      py::arg("tolerance") = 0.1, py::arg("seed") = 0);

  m.def(
      "min_error_cut",
      [](const Eigen::MatrixXd& errors, bool vertical) {
        const SeamCut cut =
            min_error_cut(errors, vertical ? SeamOrientation::kVertical : SeamOrientation::kHorizontal);
        return py::make_tuple(cut.path, cut.cost);
      },
      py::arg("errors"), py::arg("vertical") = true);

  m.def(
      "closed_form_size",
      [](int k1, int k2, int dr, int n, int f, int w) { return report_dict(closed_form_size(k1, k2, dr, n, f, w)); },
      py::arg("k1"), py::arg("k2"), py::arg("reduced_dim"), py::arg("clusters"), py::arg("cdfs"),
      py::arg("codewords"));
}
