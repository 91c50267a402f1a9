#pragma once

#include <string>
#include <vector>

namespace ragforge {

/// The configured document-language set. Order is significant: it is the
/// canonical iteration order for deterministic builds.
class LanguageSet {
public:
    LanguageSet() : langs_{"en", "zh", "de", "fr", "cs"} {}
    explicit LanguageSet(std::vector<std::string> langs) : langs_(std::move(langs)) {}

    bool contains(const std::string& lang) const {
        for (const auto& l : langs_)
            if (l == lang)
                return true;
        return false;
    }

    const std::vector<std::string>& codes() const { return langs_; }
    std::size_t size() const { return langs_.size(); }

private:
    std::vector<std::string> langs_;
};

} // namespace ragforge
