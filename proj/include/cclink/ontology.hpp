#pragma once

// Concept ontology: a forest of concepts, each with a canonical name and a
// synonym list. Synonyms are normalized at load time and must be globally
// unique so that an exact string lookup is unambiguous.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cclink/common.hpp"

namespace cclink {

struct Concept {
  std::string id;
  std::string canonical;              // normalized
  std::vector<std::string> synonyms;  // normalized; canonical is always first
  std::string parent;                 // empty for roots
};

class Ontology {
 public:
  Ontology() = default;

  // Validates and indexes a concept list: normalizes strings, checks id and
  // synonym uniqueness, parent existence, and acyclicity.
  static Ontology from_concepts(std::vector<Concept> concepts);

  // Reads JSONL, one concept per line:
  //   {"id": ..., "canonical": ..., "synonyms": [...], "parent": ...|null}
  static Ontology load(const std::string& path);

  // Writes the same JSONL format, concepts ordered by id. load(save(x))
  // reproduces x.
  void save(const std::string& path) const;

  // Folds each listed concept into its parent: synonyms transfer, children
  // re-parent to the absorbing concept. Handles chains (a listed concept
  // whose parent is also listed). Listing a root or an unknown id is an
  // error. Returns the reduced ontology.
  Ontology merge_children(const std::vector<std::string>& merge_ids) const;

  const std::vector<Concept>& concepts() const { return concepts_; }
  const Concept* find(const std::string& id) const;

  // Exact lookup of a normalized string; returns the owning concept id or
  // nullptr.
  const std::string* lookup_exact(const std::string& normalized) const;

  // (synonym, concept id) pairs sorted by synonym, for building derived
  // indexes deterministically.
  std::vector<std::pair<std::string, std::string>> sorted_synonyms() const;

  size_t size() const { return concepts_.size(); }
  size_t synonym_count() const;

  // Hash over the full concept content (ids, names, synonyms, parents);
  // models trained against this ontology embed it and refuse to run
  // against a different one.
  uint64_t fingerprint() const;

 private:
  std::vector<Concept> concepts_;  // sorted by id
  std::unordered_map<std::string, size_t> by_id_;
  std::unordered_map<std::string, std::string> synonym_to_id_;
};

}  // namespace cclink
