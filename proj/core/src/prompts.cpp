#include "ragforge/prompts.hpp"

#include <fstream>
#include <sstream>

namespace ragforge::prompts {

std::string fill(std::string text, const std::map<std::string, std::string>& slots) {
    for (const auto& [key, value] : slots) {
        std::size_t pos = 0;
        while ((pos = text.find(key, pos)) != std::string::npos) {
            text.replace(pos, key.size(), value);
            pos += value.size();
        }
    }
    return text;
}

std::string sft_user(const std::string& doc, const std::string& sent) {
    return "<document>" + doc + "</document><input sentence>" + sent + "</input sentence>";
}

const char* const kEmptyDocMarker = "(no document provided)";

namespace {

const char* const kTranslateSystem =
    "You are a professional translator, and your task is to translate a given input sentence "
    "from English to Chinese. In addition to the input sentence, you will be provided with a "
    "document that may contain relevant information to aid in the translation. However, be "
    "aware that some documents may contain irrelevant or noisy information";

const char* const kTranslateUser =
    "<document>[doc]</document><input sentence>[sent]</input sentence>\n"
    "\n"
    "First judge how relevant the document is to translating the input sentence, and rate the "
    "relevance on a 5-point scale:\n"
    "5 - the document directly covers the sentence's subject and terminology\n"
    "4 - the document covers the subject; most terminology applies\n"
    "3 - the document is partially related; some details help\n"
    "2 - the document is mostly unrelated; little of it helps\n"
    "1 - the document is entirely unrelated or noisy\n"
    "\n"
    "Then translate the input sentence to Chinese.\n"
    "Respond in exactly this format:\n"
    "Judgment: <one or two sentences>\n"
    "Relevance: <integer 1-5>\n"
    "Translation: <the Chinese translation>";

const char* const kGrb =
    "Score the following translation from English to Chinese with respect to the human "
    "reference on a continuous scale from 0 to 100, where a score of zero means \"no meaning "
    "preserved\" and a score of one hundred means \"perfect meaning and grammar\".\n"
    "\n"
    "English source: 『[src]』\n"
    "Human reference: 『[ref]』\n"
    "Model translation: 『[hyp]』\n"
    "\n"
    "Score:";

const char* const kGrf =
    "Score the following translation from English to Chinese on a continuous scale from 0 to "
    "100, where a score of zero means \"no meaning preserved\" and a score of one hundred "
    "means \"perfect meaning and grammar\".\n"
    "\n"
    "English source: 『[src]』\n"
    "Model translation: 『[hyp]』\n"
    "\n"
    "Score:";

const char* const kSketKnowledge =
    "Write one paragraph, in [lang], of factual background knowledge about the entities and "
    "subject of the following sentence. Output only the paragraph.\n"
    "Sentence: [sent]";

const char* const kClicSystem =
    "You are given a document composed of paragraphs in several languages, and the beginning "
    "of a summary. Expand the partial summary into the complete summary, using the document "
    "as background. Output only the complete summary.";

const char* const kClrdSystem =
    "You are given two documents in different languages. Decide whether they describe the "
    "same subject. Answer exactly \"yes\" if they are relevant to each other, or \"no\" if "
    "they are not.";

PromptSet make_defaults() {
    PromptSet p;
    p.version = "1";
    p.translate_system = kTranslateSystem;
    p.translate_user = kTranslateUser;
    p.grb = kGrb;
    p.grf = kGrf;
    p.sket_knowledge = kSketKnowledge;
    p.clic_system = kClicSystem;
    p.clrd_system = kClrdSystem;
    return p;
}

std::string read_if_present(const std::filesystem::path& path, const std::string& fallback) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return fallback;
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    // Editors append a final newline; the templates are defined without one.
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

} // namespace

const PromptSet& default_prompts() {
    static const PromptSet defaults = make_defaults();
    return defaults;
}

PromptSet load_prompts(const std::filesystem::path& dir) {
    PromptSet p = default_prompts();
    p.translate_system = read_if_present(dir / "translate_system.txt", p.translate_system);
    p.translate_user = read_if_present(dir / "translate_user.txt", p.translate_user);
    p.grb = read_if_present(dir / "grb.txt", p.grb);
    p.grf = read_if_present(dir / "grf.txt", p.grf);
    p.sket_knowledge = read_if_present(dir / "sket_knowledge.txt", p.sket_knowledge);
    p.clic_system = read_if_present(dir / "clic_system.txt", p.clic_system);
    p.clrd_system = read_if_present(dir / "clrd_system.txt", p.clrd_system);
    return p;
}

} // namespace ragforge::prompts
