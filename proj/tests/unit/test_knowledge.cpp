#include "doctest.h"
#include "support.hpp"

#include "vulnval/knowledge.hpp"
#include "vulnval/util.hpp"

#include <thread>

using namespace vulnval;
namespace fs = std::filesystem;

TEST_SUITE("knowledge") {

TEST_CASE("facts deduplicate on category and collapsed body") {
    vvtest::TempDir dir;
    KnowledgeStore s(knowledge_file(dir.path(), "t1"));
    CHECK(s.render().empty());
    CHECK(s.add({FactCategory::endpoint, "POST /register accepts role", "r1"}));
    CHECK_FALSE(s.add({FactCategory::endpoint, "  POST   /register accepts role ", "r2"}));
    CHECK(s.add({FactCategory::auth_requirement, "POST /register accepts role", "r2"}));
    CHECK(s.size() == 2);
    auto text = s.render();
    CHECK(text.find("endpoint: POST /register accepts role") != std::string::npos);
    CHECK(text.find("auth_requirement:") != std::string::npos);
}

TEST_CASE("facts persist across store instances") {
    vvtest::TempDir dir;
    const auto path = knowledge_file(dir.path(), "t2");
    {
        KnowledgeStore s(path);
        s.add({FactCategory::code_location, "app.php:10 trusts role", "r1"});
        s.add({FactCategory::error_signature, "403 on bad nonce", "r1"});
    }
    KnowledgeStore again(path);
    REQUIRE(again.size() == 2);
    CHECK(again.facts()[0].body == "app.php:10 trusts role");
    CHECK(again.facts()[1].source_run == "r1");
    CHECK_FALSE(again.add({FactCategory::error_signature, "403 on bad nonce", "r3"}));
    CHECK(split_lines(read_file(path)).size() == 2);
}

TEST_CASE("category spellings round-trip") {
    for (auto c : {FactCategory::endpoint, FactCategory::config_constraint, FactCategory::auth_requirement,
                   FactCategory::code_location, FactCategory::error_signature}) {
        CHECK(parse_fact_category(to_string(c)) == c);
    }
    CHECK_THROWS_AS(parse_fact_category("rumour"), std::invalid_argument);
}

TEST_CASE("concurrent writers to the same file keep every distinct fact once") {
    vvtest::TempDir dir;
    const auto path = knowledge_file(dir.path(), "t3");
    KnowledgeStore a(path), b(path);
    std::thread ta([&] {
        for (int i = 0; i < 50; ++i) a.add({FactCategory::endpoint, "a" + std::to_string(i), "ra"});
    });
    std::thread tb([&] {
        for (int i = 0; i < 50; ++i) b.add({FactCategory::endpoint, "b" + std::to_string(i), "rb"});
    });
    ta.join();
    tb.join();
    KnowledgeStore reloaded(path);
    CHECK(reloaded.size() == 100);
}

}
