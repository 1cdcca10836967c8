#include "cclink/ontology.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "cclink/textprep.hpp"

namespace cclink {

using nlohmann::json;

Ontology Ontology::from_concepts(std::vector<Concept> concepts) {
  Ontology ont;
  std::sort(concepts.begin(), concepts.end(),
            [](const Concept& a, const Concept& b) { return a.id < b.id; });

  for (Concept& c : concepts) {
    if (c.id.empty()) throw data_error("ontology: concept with empty id");
    c.canonical = normalize(c.canonical);
    if (c.canonical.empty()) throw data_error("ontology: concept " + c.id + " has empty canonical name");

    // Normalize synonyms, force the canonical to the front, drop duplicates
    // within the concept.
    std::vector<std::string> cleaned;
    cleaned.push_back(c.canonical);
    for (const std::string& raw : c.synonyms) {
      std::string s = normalize(raw);
      if (s.empty()) throw data_error("ontology: concept " + c.id + " has an empty synonym");
      if (std::find(cleaned.begin(), cleaned.end(), s) == cleaned.end()) cleaned.push_back(s);
    }
    c.synonyms = std::move(cleaned);
  }

  for (size_t i = 0; i < concepts.size(); i++) {
    if (!ont.by_id_.emplace(concepts[i].id, i).second)
      throw data_error("ontology: duplicate concept id " + concepts[i].id);
  }
  for (const Concept& c : concepts) {
    for (const std::string& s : c.synonyms) {
      auto inserted = ont.synonym_to_id_.emplace(s, c.id);
      if (!inserted.second && inserted.first->second != c.id)
        throw data_error("ontology: synonym \"" + s + "\" claimed by both " +
                         inserted.first->second + " and " + c.id);
    }
  }
  for (const Concept& c : concepts) {
    if (!c.parent.empty() && !ont.by_id_.count(c.parent))
      throw data_error("ontology: concept " + c.id + " has unknown parent " + c.parent);
  }

  // Cycle check: follow parent links from every node; a well-formed forest
  // terminates within size() steps.
  for (const Concept& c : concepts) {
    const Concept* cur = &c;
    size_t steps = 0;
    while (!cur->parent.empty()) {
      if (++steps > concepts.size())
        throw data_error("ontology: parent cycle involving concept " + c.id);
      cur = &concepts[ont.by_id_.at(cur->parent)];
    }
  }

  ont.concepts_ = std::move(concepts);
  return ont;
}

Ontology Ontology::load(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_file(path));
  std::vector<Concept> concepts;
  for (size_t i = 0; i < lines.size(); i++) {
    if (lines[i].empty()) continue;
    json obj;
    try {
      obj = json::parse(lines[i]);
    } catch (const json::exception& e) {
      throw data_error(path, i + 1, std::string("bad JSON: ") + e.what());
    }
    try {
      Concept c;
      c.id = obj.at("id").get<std::string>();
      c.canonical = obj.at("canonical").get<std::string>();
      if (obj.contains("synonyms"))
        c.synonyms = obj.at("synonyms").get<std::vector<std::string>>();
      if (obj.contains("parent") && !obj.at("parent").is_null())
        c.parent = obj.at("parent").get<std::string>();
      concepts.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw data_error(path, i + 1, std::string("bad concept record: ") + e.what());
    }
  }
  try {
    return from_concepts(std::move(concepts));
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void Ontology::save(const std::string& path) const {
  std::string out;
  for (const Concept& c : concepts_) {
    json obj;
    obj["id"] = c.id;
    obj["canonical"] = c.canonical;
    obj["synonyms"] = c.synonyms;
    if (c.parent.empty())
      obj["parent"] = nullptr;
    else
      obj["parent"] = c.parent;
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

Ontology Ontology::merge_children(const std::vector<std::string>& merge_ids) const {
  std::set<std::string> listed;
  for (const std::string& id : merge_ids) {
    if (!by_id_.count(id)) throw data_error("merge: unknown concept id " + id);
    if (find(id)->parent.empty()) throw data_error("merge: concept " + id + " is a root");
    if (!listed.insert(id).second) throw data_error("merge: concept " + id + " listed twice");
  }

  // Work on an id-keyed copy so removals are cheap.
  std::map<std::string, Concept> work;
  for (const Concept& c : concepts_) work[c.id] = c;

  // Fold deepest concepts first so chains (child and parent both listed)
  // collapse upward one level at a time.
  auto depth = [&](const std::string& id) {
    size_t d = 0;
    const Concept* cur = find(id);
    while (!cur->parent.empty()) {
      cur = find(cur->parent);
      d++;
    }
    return d;
  };
  std::vector<std::string> order(listed.begin(), listed.end());
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    size_t da = depth(a), db = depth(b);
    if (da != db) return da > db;
    return a < b;
  });

  for (const std::string& id : order) {
    Concept victim = work.at(id);
    Concept& parent = work.at(victim.parent);
    for (const std::string& s : victim.synonyms) parent.synonyms.push_back(s);
    for (auto& entry : work) {
      if (entry.second.parent == id) entry.second.parent = victim.parent;
    }
    work.erase(id);
  }

  std::vector<Concept> merged;
  merged.reserve(work.size());
  for (auto& entry : work) merged.push_back(std::move(entry.second));
  return from_concepts(std::move(merged));
}

const Concept* Ontology::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &concepts_[it->second];
}

const std::string* Ontology::lookup_exact(const std::string& normalized) const {
  auto it = synonym_to_id_.find(normalized);
  return it == synonym_to_id_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::string, std::string>> Ontology::sorted_synonyms() const {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(synonym_to_id_.size());
  for (const auto& entry : synonym_to_id_) pairs.push_back(entry);
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

size_t Ontology::synonym_count() const {
  size_t n = 0;
  for (const Concept& c : concepts_) n += c.synonyms.size();
  return n;
}

uint64_t Ontology::fingerprint() const {
  uint64_t hash = 14695981039346656037ull;
  auto feed = [&hash](const std::string& s) {
    hash = fnv1a64(s, hash);
    const char sep = '\x1f';
    hash = fnv1a64(&sep, 1, hash);
  };
  for (const Concept& c : concepts_) {
    feed(c.id);
    feed(c.canonical);
    for (const std::string& s : c.synonyms) feed(s);
    feed(c.parent);
  }
  return hash;
}

}  // namespace cclink
