#include "ragforge/tokenizer.hpp"

namespace ragforge {

const Tokenizer& default_tokenizer() {
    static const WordTokenizer instance;
    return instance;
}

} // namespace ragforge
