#include "kamred/types.hpp"

#include <functional>

namespace kamred {

std::vector<MultiIndex> diamond(int n, int K) {
    std::vector<MultiIndex> out;
    MultiIndex k(n, 0);
    std::function<void(int, int)> rec = [&](int pos, int budget) {
        if (pos == n) {
            out.push_back(k);
            return;
        }
        for (int v = -budget; v <= budget; ++v) {
            k[pos] = v;
            rec(pos + 1, budget - std::abs(v));
        }
        k[pos] = 0;
    };
    rec(0, K);
    return out;
}

std::string to_string(const MultiIndex& k) {
    std::string s = "(";
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(k[i]);
    }
    return s + ")";
}

} // namespace kamred
