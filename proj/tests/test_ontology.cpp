#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>
#include <vector>

#include "cclink/common.hpp"
#include "cclink/ontology.hpp"

using namespace cclink;

namespace {

Concept make_concept(const std::string& id, const std::string& canonical,
                     std::vector<std::string> synonyms = {}, const std::string& parent = "") {
  Concept c;
  c.id = id;
  c.canonical = canonical;
  c.synonyms = std::move(synonyms);
  c.parent = parent;
  return c;
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/cclink_ontology_test_") + name;
}

}  // namespace

TEST_CASE("from_concepts normalizes and indexes") {
  Ontology ont = Ontology::from_concepts({
      make_concept("c2", "Chest  Pain", {"cp", "chest pain"}),
      make_concept("c1", "Fever", {"temp", "Febrile"}),
  });
  REQUIRE(ont.size() == 2);
  CHECK(ont.concepts()[0].id == "c1");
  CHECK(ont.concepts()[1].canonical == "chest pain");
  // Canonical always leads the synonym list; duplicates collapse.
  CHECK(ont.concepts()[1].synonyms == std::vector<std::string>{"chest pain", "cp"});
  CHECK(*ont.lookup_exact("febrile") == "c1");
  CHECK(*ont.lookup_exact("chest pain") == "c2");
  CHECK(ont.lookup_exact("absent") == nullptr);
  CHECK(ont.synonym_count() == 5);
}

TEST_CASE("duplicate ids are rejected") {
  CHECK_THROWS_AS(Ontology::from_concepts({make_concept("c1", "fever"), make_concept("c1", "chills")}),
                  Error);
}

TEST_CASE("synonym collisions name both concepts") {
  try {
    Ontology::from_concepts({make_concept("c1", "fever", {"hot"}),
                             make_concept("c2", "pyrexia", {"hot"})});
    FAIL("expected a collision error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
    std::string message = e.what();
    CHECK(message.find("c1") != std::string::npos);
    CHECK(message.find("c2") != std::string::npos);
    CHECK(message.find("hot") != std::string::npos);
  }
}

TEST_CASE("unknown parents and cycles are rejected") {
  CHECK_THROWS_AS(Ontology::from_concepts({make_concept("c1", "fever", {}, "nope")}), Error);
  CHECK_THROWS_AS(Ontology::from_concepts({make_concept("c1", "fever", {}, "c2"),
                                           make_concept("c2", "chills", {}, "c1")}),
                  Error);
}

TEST_CASE("load reports malformed lines with their line number") {
  std::string path = temp_path("bad.jsonl");
  write_file(path, "{\"id\":\"c1\",\"canonical\":\"fever\"}\nnot json\n");
  try {
    Ontology::load(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("save/load round-trips") {
  Ontology ont = Ontology::from_concepts({
      make_concept("c1", "fever", {"temp"}),
      make_concept("c2", "abd pain", {"belly pain"}),
      make_concept("c3", "ruq abd pain", {}, "c2"),
  });
  std::string path = temp_path("roundtrip.jsonl");
  ont.save(path);
  Ontology back = Ontology::load(path);
  REQUIRE(back.size() == ont.size());
  for (size_t i = 0; i < ont.size(); i++) {
    CHECK(back.concepts()[i].id == ont.concepts()[i].id);
    CHECK(back.concepts()[i].canonical == ont.concepts()[i].canonical);
    CHECK(back.concepts()[i].synonyms == ont.concepts()[i].synonyms);
    CHECK(back.concepts()[i].parent == ont.concepts()[i].parent);
  }
  CHECK(back.fingerprint() == ont.fingerprint());

  // Saving the loaded copy reproduces the file byte for byte.
  std::string again = temp_path("roundtrip2.jsonl");
  back.save(again);
  CHECK(read_file(again) == read_file(path));
  std::remove(path.c_str());
  std::remove(again.c_str());
}

TEST_CASE("merge_children folds a child into its parent") {
  Ontology ont = Ontology::from_concepts({
      make_concept("c1", "abd pain", {"belly pain"}),
      make_concept("c2", "ruq abd pain", {"ruq pain"}, "c1"),
      make_concept("c3", "fever"),
  });
  size_t synonyms_before = ont.synonym_count();
  Ontology merged = ont.merge_children({"c2"});
  CHECK(merged.size() == ont.size() - 1);
  CHECK(merged.synonym_count() == synonyms_before);
  CHECK(merged.find("c2") == nullptr);
  // The child's surface forms now resolve to the parent.
  CHECK(*merged.lookup_exact("ruq abd pain") == "c1");
  CHECK(*merged.lookup_exact("ruq pain") == "c1");
  CHECK(*merged.lookup_exact("abd pain") == "c1");
}

TEST_CASE("merge_children handles chains and re-parents grandchildren") {
  Ontology ont = Ontology::from_concepts({
      make_concept("a", "pain"),
      make_concept("b", "abd pain", {}, "a"),
      make_concept("c", "ruq abd pain", {}, "b"),
      make_concept("d", "severe ruq abd pain", {}, "c"),
  });
  // b and c both fold away; d must end up under a with all synonyms intact.
  Ontology merged = ont.merge_children({"b", "c"});
  REQUIRE(merged.size() == 2);
  CHECK(*merged.lookup_exact("abd pain") == "a");
  CHECK(*merged.lookup_exact("ruq abd pain") == "a");
  CHECK(merged.find("d")->parent == "a");
  CHECK(merged.synonym_count() == ont.synonym_count());
}

TEST_CASE("merge_children rejects bad input") {
  Ontology ont = Ontology::from_concepts({
      make_concept("c1", "abd pain"),
      make_concept("c2", "ruq abd pain", {}, "c1"),
  });
  CHECK_THROWS_AS(ont.merge_children({"missing"}), Error);
  CHECK_THROWS_AS(ont.merge_children({"c1"}), Error);  // root
  CHECK_THROWS_AS(ont.merge_children({"c2", "c2"}), Error);
}

TEST_CASE("fingerprint tracks ontology content") {
  Ontology a = Ontology::from_concepts({make_concept("c1", "fever")});
  Ontology b = Ontology::from_concepts({make_concept("c1", "fever"), make_concept("c2", "chills")});
  CHECK(a.fingerprint() != b.fingerprint());
  // Synonym edits change the surface form mapping, so they must change the
  // fingerprint even though the id set is untouched.
  Ontology c = Ontology::from_concepts({make_concept("c1", "fever", {"temp"})});
  CHECK(a.fingerprint() != c.fingerprint());
}
