#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace ragforge::prompts {

/// Template slots are bracket tokens ([doc], [sent], [src], [ref], [hyp],
/// [lang]); fill() replaces every occurrence of each key.
std::string fill(std::string text, const std::map<std::string, std::string>& slots);

/// The user content for SFT rows and translation requests:
/// "<document>[doc]</document><input sentence>[sent]</input sentence>".
std::string sft_user(const std::string& doc, const std::string& sent);

/// Rendered when a setting supplies no document at all.
extern const char* const kEmptyDocMarker;

struct PromptSet {
    std::string version;
    std::string translate_system; // system role, all translation tasks
    std::string translate_user;   // judgment + rating rubric + labeled sections
    std::string grb;              // reference-based judge, slots [src] [ref] [hyp]
    std::string grf;              // reference-free judge, slots [src] [hyp]
    std::string sket_knowledge;   // knowledge generation, slots [sent] [lang]
    std::string clic_system;      // summary completion objective
    std::string clrd_system;      // cross-language relevance objective
};

const PromptSet& default_prompts();

/// Overrides defaults with any of translate_system.txt, translate_user.txt,
/// grb.txt, grf.txt, sket_knowledge.txt, clic_system.txt, clrd_system.txt
/// found in `dir`. Missing files keep the built-in text.
PromptSet load_prompts(const std::filesystem::path& dir);

} // namespace ragforge::prompts
