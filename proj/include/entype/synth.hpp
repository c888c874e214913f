#pragma once

#include <string>
#include <vector>

#include "entype/config.hpp"
#include "entype/corpus.hpp"
#include "entype/embedding.hpp"

namespace entype {

// Synthetic corpus with known structure: type centroids in embedding space,
// entity vectors mixed from their gold centroids, names built from per-type
// morph suffixes, contexts carrying indicative tokens. Every token is letter
// only so the cleaning pass is the identity on it.
struct SynthResult {
  std::vector<Sentence> corpus;
  Catalog catalog;
  TypeInventory inventory;
  EmbeddingTable word_vecs;
  EmbeddingTable entity_vecs;

  std::vector<std::string> zeroed_entities;  // ids whose entity vector was zeroed
  std::size_t signal_sentences = 0;
  std::size_t noise_sentences = 0;
};

SynthResult generate_synth(const RunConfig::Synth& s);

// Writes corpus.tsv, catalog.tsv, inventory.txt, word_vecs.txt,
// entity_vecs.txt, and manifest.json into dir (which must exist).
void write_synth(const SynthResult& r, const std::string& dir);

}  // namespace entype
