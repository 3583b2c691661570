#include "gduq/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gduq/errors.hpp"

namespace gduq {

using ordered_json = nlohmann::ordered_json;

nlohmann::ordered_json spec_to_json(const ModelSpec& spec) {
  ordered_json j;
  j["backbone"] = to_string(spec.backbone);
  j["num_mp_layers"] = spec.num_mp_layers;
  j["hidden_dim"] = spec.hidden_dim;
  j["mlp_head_layers"] = spec.mlp_head_layers;
  j["num_classes"] = spec.num_classes;
  j["task"] = to_string(spec.task);
  j["input_dim"] = spec.input_dim;
  ordered_json a;
  a["kind"] = to_string(spec.anchoring.kind);
  a["layer"] = spec.anchoring.layer;
  a["num_anchors"] = spec.anchoring.num_anchors;
  a["pretrained_frozen_backbone"] = spec.anchoring.pretrained_frozen_backbone;
  a["nfa_concat"] = spec.anchoring.nfa_concat_original ? "original" : "anchor";
  j["anchoring"] = std::move(a);
  return j;
}

ModelSpec spec_from_json(const nlohmann::ordered_json& j) {
  ModelSpec spec;
  spec.backbone = backbone_from_string(j.at("backbone").get<std::string>());
  spec.num_mp_layers = j.at("num_mp_layers").get<int>();
  spec.hidden_dim = j.at("hidden_dim").get<int>();
  spec.mlp_head_layers = j.at("mlp_head_layers").get<int>();
  spec.num_classes = j.at("num_classes").get<int>();
  spec.task = task_from_string(j.at("task").get<std::string>());
  spec.input_dim = j.at("input_dim").get<int>();
  const auto& a = j.at("anchoring");
  spec.anchoring.kind = anchoring_kind_from_string(a.at("kind").get<std::string>());
  spec.anchoring.layer = a.at("layer").get<int>();
  spec.anchoring.num_anchors = a.at("num_anchors").get<int>();
  spec.anchoring.pretrained_frozen_backbone = a.at("pretrained_frozen_backbone").get<bool>();
  spec.anchoring.nfa_concat_original = a.at("nfa_concat").get<std::string>() == "original";
  return spec;
}

namespace {

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (const double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      char buf[8];
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(buf, 8);
    }
  }
}

std::vector<double> read_doubles(std::ifstream& in, std::size_t offset, std::size_t count) {
  in.seekg(static_cast<std::streamoff>(offset * sizeof(double)));
  std::vector<double> v(count);
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (auto& d : v) {
      char buf[8];
      in.read(buf, 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
      std::memcpy(&d, &bits, sizeof(d));
    }
  }
  if (!in) throw ArtifactError("checkpoint: truncated binary payload");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& prefix, const ModelSpec& spec, const Params& params,
                     const AnchorSource* source) {
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw ArtifactError("checkpoint: cannot open '" + prefix + ".bin' for writing");

  ordered_json manifest;
  manifest["v"] = "1";
  manifest["spec"] = spec_to_json(spec);

  std::size_t offset = 0;
  ordered_json tensors = ordered_json::array();
  for (const auto& [name, t] : params.items) {
    ordered_json entry;
    entry["name"] = name;
    entry["rows"] = t.rows();
    entry["cols"] = t.cols();
    entry["offset"] = offset;
    tensors.push_back(std::move(entry));
    write_doubles(bin, t.values());
    offset += t.size();
  }
  manifest["tensors"] = std::move(tensors);

  if (source == nullptr) {
    manifest["anchor_source"] = nullptr;
  } else {
    ordered_json src;
    if (source->kind == AnchorSource::Kind::Gaussian) {
      src["kind"] = "gaussian";
      src["mode"] = to_string(source->mode);
      src["rng_seed"] = source->rng_seed;
      src["dim"] = source->mean.size();
      src["mean_offset"] = offset;
      write_doubles(bin, source->mean);
      offset += source->mean.size();
      src["std_offset"] = offset;
      write_doubles(bin, source->stddev);
      offset += source->stddev.size();
    } else {
      src["kind"] = "frozen";
      src["mode"] = to_string(source->mode);
      src["rng_seed"] = source->rng_seed;
      src["fingerprint"] = std::to_string(source->backbone_fingerprint);
      ordered_json items = ordered_json::array();
      for (const auto& m : source->frozen) {
        ordered_json entry;
        entry["rows"] = m.rows;
        entry["cols"] = m.cols;
        entry["offset"] = offset;
        items.push_back(std::move(entry));
        write_doubles(bin, m.data);
        offset += m.data.size();
      }
      src["items"] = std::move(items);
    }
    manifest["anchor_source"] = std::move(src);
  }
  if (!bin) throw ArtifactError("checkpoint: write to '" + prefix + ".bin' failed");
  bin.close();

  std::ofstream mf(prefix + ".json");
  if (!mf) throw ArtifactError("checkpoint: cannot open '" + prefix + ".json' for writing");
  mf << manifest.dump(2) << "\n";
  if (!mf) throw ArtifactError("checkpoint: write to '" + prefix + ".json' failed");
}

Checkpoint load_checkpoint(const std::string& prefix) {
  std::ifstream mf(prefix + ".json");
  if (!mf) throw ArtifactError("checkpoint: missing manifest '" + prefix + ".json'");
  ordered_json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("checkpoint: bad manifest '" + prefix + ".json': " + e.what());
  }
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw ArtifactError("checkpoint: missing payload '" + prefix + ".bin'");

  Checkpoint out;
  try {
    if (manifest.at("v").get<std::string>() != "1")
      throw ArtifactError("checkpoint: unsupported version");
    out.spec = spec_from_json(manifest.at("spec"));
    for (const auto& entry : manifest.at("tensors")) {
      const auto rows = entry.at("rows").get<std::size_t>();
      const auto cols = entry.at("cols").get<std::size_t>();
      const auto offset = entry.at("offset").get<std::size_t>();
      out.params.items.emplace_back(
          entry.at("name").get<std::string>(),
          Tensor::from_data(rows, cols, read_doubles(bin, offset, rows * cols), true));
    }
    const auto& src_j = manifest.at("anchor_source");
    if (!src_j.is_null()) {
      AnchorSource src;
      src.mode = anchoring_kind_from_string(src_j.at("mode").get<std::string>());
      src.rng_seed = src_j.at("rng_seed").get<std::uint64_t>();
      if (src_j.at("kind").get<std::string>() == "gaussian") {
        src.kind = AnchorSource::Kind::Gaussian;
        const auto d = src_j.at("dim").get<std::size_t>();
        src.mean = read_doubles(bin, src_j.at("mean_offset").get<std::size_t>(), d);
        src.stddev = read_doubles(bin, src_j.at("std_offset").get<std::size_t>(), d);
      } else {
        src.kind = AnchorSource::Kind::FrozenSet;
        src.backbone_fingerprint = std::stoull(src_j.at("fingerprint").get<std::string>());
        for (const auto& entry : src_j.at("items")) {
          const auto rows = entry.at("rows").get<std::size_t>();
          const auto cols = entry.at("cols").get<std::size_t>();
          src.frozen.emplace_back(rows, cols,
                                  read_doubles(bin, entry.at("offset").get<std::size_t>(),
                                               rows * cols));
        }
      }
      out.source = std::move(src);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("checkpoint: bad manifest '" + prefix + ".json': " + e.what());
  }
  return out;
}

}  // namespace gduq
