// Compress a block with side information, then reconstruct it.
#include <iostream>

#include <polarforge/concat.hpp>
#include <polarforge/construction.hpp>

using namespace polarforge;

int main() {
    const ChannelModel ch = BscParams{0.05};
    BuildOptions o;
    o.inner = SelectCriterion::epsilon(1e-2);
    o.outer = SelectCriterion::epsilon(1e-3);
    o.trials = 4000;
    o.seed = 7;
    ConcatCode code = build_concat_code(ch, 64, 32, o);
    std::cout << "N=" << code.N() << " payload bits=" << code.payload_length() << " message bits=" << code.message_length() << '\n';

    Rng rng(11);
    BitBlock x;
    EvidenceVector ev;
    draw_layer_source(ch, code.N(), 0.5, rng, x, ev);

    CompressedPayload p = concat_compress(x, code);
    DecompressResult r = concat_decompress(ev, p, code);
    std::cout << (r.x_hat == x ? "reconstructed" : "decoding error") << '\n';

    std::size_t fails = 0;
    for (int t = 0; t < 200; ++t) {
        draw_layer_source(ch, code.N(), 0.5, rng, x, ev);
        fails += concat_decompress(ev, concat_compress(x, code), code).x_hat != x;
    }
    std::cout << "block failures " << fails << "/200\n";
}
