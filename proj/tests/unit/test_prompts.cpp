#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "ragforge/prompts.hpp"

using namespace ragforge;
using namespace ragforge::prompts;

TEST_CASE("fill replaces every occurrence of each slot") {
    auto got = fill("[a] and [b] then [a] again", {{"[a]", "x"}, {"[b]", "y"}});
    CHECK(got == "x and y then x again");
}

TEST_CASE("fill leaves unknown slots and slotless text alone") {
    CHECK(fill("no slots here", {{"[a]", "x"}}) == "no slots here");
    CHECK(fill("[keep] this", {{"[other]", "x"}}) == "[keep] this");
    CHECK(fill("", {{"[a]", "x"}}) == "");
}

TEST_CASE("fill does not rescan substituted text") {
    // A value containing its own slot token must survive literally.
    auto got = fill("start [x] end", {{"[x]", "loop [x] guard"}});
    CHECK(got == "start loop [x] guard end");
}

TEST_CASE("sft_user wraps the document and sentence in their tags") {
    CHECK(sft_user("DOC", "SENT") ==
          "<document>DOC</document><input sentence>SENT</input sentence>");
    CHECK(sft_user("", "") == "<document></document><input sentence></input sentence>");
}

TEST_CASE("default prompts carry the expected slots") {
    const auto& p = default_prompts();
    CHECK(p.version == "1");
    CHECK(p.translate_user.find("[doc]") != std::string::npos);
    CHECK(p.translate_user.find("[sent]") != std::string::npos);
    CHECK(p.translate_user.find("Relevance: <integer 1-5>") != std::string::npos);
    CHECK(p.translate_user.find("5-point scale") != std::string::npos);
    CHECK(p.translate_system.find("professional translator") != std::string::npos);

    CHECK(p.grb.find("[src]") != std::string::npos);
    CHECK(p.grb.find("[ref]") != std::string::npos);
    CHECK(p.grb.find("[hyp]") != std::string::npos);
    CHECK(p.grf.find("[src]") != std::string::npos);
    CHECK(p.grf.find("[hyp]") != std::string::npos);
    CHECK(p.grf.find("[ref]") == std::string::npos);

    CHECK(p.sket_knowledge.find("[sent]") != std::string::npos);
    CHECK(p.sket_knowledge.find("[lang]") != std::string::npos);
    CHECK_FALSE(p.clic_system.empty());
    CHECK_FALSE(p.clrd_system.empty());
}

TEST_CASE("judge prompts render complete requests") {
    auto grb = fill(default_prompts().grb,
                    {{"[src]", "src text"}, {"[ref]", "ref text"}, {"[hyp]", "hyp text"}});
    CHECK(grb.find("『src text』") != std::string::npos);
    CHECK(grb.find("『ref text』") != std::string::npos);
    CHECK(grb.find("『hyp text』") != std::string::npos);
    CHECK(grb.find("[") == std::string::npos); // every slot consumed
}

TEST_CASE("load_prompts overrides only the files present") {
    testsupport::TempDir dir("prompts");
    {
        std::ofstream out(dir / "grb.txt", std::ios::binary);
        out << "custom grb [src] [ref] [hyp]\n"; // editors add the newline
    }
    {
        std::ofstream out(dir / "clic_system.txt", std::ios::binary);
        out << "custom clic objective\r\n";
    }
    auto p = load_prompts(dir.path());
    CHECK(p.grb == "custom grb [src] [ref] [hyp]"); // trailing newline dropped
    CHECK(p.clic_system == "custom clic objective"); // CRLF dropped too
    const auto& d = default_prompts();
    CHECK(p.grf == d.grf);
    CHECK(p.translate_system == d.translate_system);
    CHECK(p.translate_user == d.translate_user);
    CHECK(p.sket_knowledge == d.sket_knowledge);
    CHECK(p.clrd_system == d.clrd_system);
}

TEST_CASE("load_prompts from an empty directory is the default set") {
    testsupport::TempDir dir("prompts-empty");
    auto p = load_prompts(dir.path());
    const auto& d = default_prompts();
    CHECK(p.translate_user == d.translate_user);
    CHECK(p.grb == d.grb);
    CHECK(p.clic_system == d.clic_system);
}
