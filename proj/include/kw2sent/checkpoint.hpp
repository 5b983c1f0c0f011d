#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kw2sent/errors.hpp"
#include "kw2sent/model.hpp"
#include "kw2sent/vocab.hpp"

namespace kw2sent {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'K', 'W', '2', 'S',
                                             'E', 'N', 'T', '1'};

/// A loaded model together with the vocabularies it was trained with.
struct LoadedModel {
  Generator<float> model;
  WordVocabulary words;
  TagVocabulary tags;
};

/// Binary layout: 8-byte magic, u32 version, u64 manifest length, manifest
/// JSON (hyperparameters, flags, parameter shapes, both vocabularies), then
/// each parameter's raw float32 little-endian data in manifest order.
template <class Real>
void save_checkpoint(const std::string& path, const Generator<Real>& model,
                     const WordVocabulary& words, const TagVocabulary& tags) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);

  const auto& cfg = model.config();
  nlohmann::ordered_json manifest;
  manifest["version"] = 1;
  manifest["config"] = {
      {"vocab_size", cfg.vocab_size},
      {"tag_count", cfg.tag_count},
      {"word_dim", cfg.word_dim},
      {"keyword_dim", cfg.keyword_dim},
      {"template_dim", cfg.template_dim},
      {"decoder_dim", cfg.decoder_dim},
      {"attention_dim", cfg.attention_dim},
      {"dropout", cfg.dropout},
      {"no_template", cfg.no_template},
  };
  auto plist = nlohmann::ordered_json::array();
  for (const auto& [name, p] : model.params()) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = p.shape();
    plist.push_back(std::move(e));
  }
  manifest["params"] = std::move(plist);
  auto wl = nlohmann::ordered_json::array();
  for (std::size_t i = 4; i < words.size(); ++i)
    wl.push_back(words.word(static_cast<int>(i)));
  manifest["word_vocab"] = std::move(wl);
  manifest["tag_vocab"] = {
      {"fine", tags.fine_tags()},
      {"universal", tags.universal_tags()},
      {"map", tags.mapping()},
  };

  std::string mbytes = manifest.dump();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  std::uint64_t mlen = mbytes.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));

  for (const auto& [name, p] : model.params()) {
    (void)name;
    if constexpr (std::is_same_v<Real, float>) {
      out.write(reinterpret_cast<const char*>(p.value().data()),
                static_cast<std::streamsize>(p.numel() * sizeof(float)));
    } else {
      std::vector<float> buf(p.numel());
      for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = static_cast<float>(p.value()[i]);
      out.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
  }
  if (!out) throw DataError("short write while saving checkpoint: " + path);
}

inline LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path);

  char magic[8];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  std::uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)) ||
      version != 1)
    throw DataError("unsupported checkpoint version in " + path);
  std::uint64_t mlen = 0;
  if (!in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen)))
    throw DataError("truncated checkpoint (manifest length): " + path);
  std::string mbytes(mlen, '\0');
  if (!in.read(mbytes.data(), static_cast<std::streamsize>(mlen)))
    throw DataError("truncated checkpoint (manifest): " + path);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mbytes);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint manifest: ") + e.what());
  }

  ModelConfig cfg;
  const auto& jc = manifest.at("config");
  cfg.vocab_size = jc.at("vocab_size").get<std::size_t>();
  cfg.tag_count = jc.at("tag_count").get<std::size_t>();
  cfg.word_dim = jc.at("word_dim").get<std::size_t>();
  cfg.keyword_dim = jc.at("keyword_dim").get<std::size_t>();
  cfg.template_dim = jc.at("template_dim").get<std::size_t>();
  cfg.decoder_dim = jc.at("decoder_dim").get<std::size_t>();
  cfg.attention_dim = jc.at("attention_dim").get<std::size_t>();
  cfg.dropout = jc.at("dropout").get<double>();
  cfg.no_template = jc.at("no_template").get<bool>();

  WordVocabulary words;
  for (const auto& w : manifest.at("word_vocab"))
    words.add(w.get<std::string>());
  if (words.size() != cfg.vocab_size)
    throw DataError("checkpoint vocab size " + std::to_string(words.size()) +
                    " does not match config " +
                    std::to_string(cfg.vocab_size));

  const auto& jt = manifest.at("tag_vocab");
  TagVocabulary tags = TagVocabulary::from_parts(
      jt.at("fine").get<std::vector<std::string>>(),
      jt.at("universal").get<std::vector<std::string>>(),
      jt.at("map").get<std::map<std::string, std::string>>());
  if (!cfg.no_template && tags.size() != cfg.tag_count)
    throw DataError("checkpoint tag vocab size does not match config");

  auto model = Generator<float>::zeros(cfg);
  if (manifest.at("params").size() != model.params().size())
    throw DataError("checkpoint lists " +
                    std::to_string(manifest.at("params").size()) +
                    " parameters, model expects " +
                    std::to_string(model.params().size()));
  for (const auto& pe : manifest.at("params")) {
    std::string name = pe.at("name").get<std::string>();
    Shape shape = pe.at("shape").get<Shape>();
    auto it = model.params().find(name);
    if (it == model.params().end())
      throw DataError("checkpoint has unknown parameter '" + name + "'");
    if (it->second.shape() != shape)
      throw DataError("checkpoint shape " + shape_str(shape) +
                      " for parameter '" + name + "' does not match model " +
                      shape_str(it->second.shape()));
    auto& val = it->second.value();
    if (!in.read(reinterpret_cast<char*>(val.data()),
                 static_cast<std::streamsize>(val.size() * sizeof(float))))
      throw DataError("truncated checkpoint while reading parameter '" + name +
                      "'");
  }
  // loaders must consume the file exactly
  char extra;
  if (in.read(&extra, 1))
    throw DataError("trailing bytes after checkpoint parameters: " + path);

  return LoadedModel{std::move(model), std::move(words), std::move(tags)};
}

}  // namespace kw2sent
