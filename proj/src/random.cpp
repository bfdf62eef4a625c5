#include "spinglass/random.hpp"

namespace spinglass {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream))
{
}

RandomStream RandomStream::substream(std::uint64_t index) const
{
    return RandomStream(seed_, mix64(stream_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

double RandomStream::gaussian() { return normal_(engine_); }

double RandomStream::uniform() { return unit_(engine_); }

std::uint64_t RandomStream::bits() { return engine_(); }

std::size_t RandomStream::index(std::size_t n)
{
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

}  // namespace spinglass
