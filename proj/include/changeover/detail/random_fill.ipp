#pragma once

#include <random>

namespace changeover {

template <class Rng>
std::vector<std::int64_t> random_fill(std::span<const Money> prices, Money budget, Rng& rng) {
    std::vector<std::int64_t> shares(prices.size(), 0);
    std::vector<std::size_t> affordable;
    for (std::size_t a = 0; a < prices.size(); ++a) {
        if (prices[a] <= budget) affordable.push_back(a);
    }
    while (!affordable.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, affordable.size() - 1);
        const std::size_t a = affordable[pick(rng)];
        shares[a] += 1;
        budget -= prices[a];
        std::erase_if(affordable, [&](std::size_t b) { return prices[b] > budget; });
    }
    return shares;
}

}  // namespace changeover
