import numpy as np

from spacelike import corpus, suite
from spacelike.deform import DeformationContext
from spacelike.surface import Grid, frame_jets


def test_shipped_file_matches_generator():
    assert corpus.load_sources() == corpus.generate()


def test_size_and_templates():
    sources = corpus.load_sources()
    assert len(sources) == corpus.SIZE
    assert len(set(sources)) == corpus.SIZE


def test_seed_changes_draws():
    assert corpus.generate(seed=1, size=3) != corpus.generate(size=3)
    assert corpus.generate(seed=1, size=3) == corpus.generate(seed=1, size=3)


def test_gradient_bound():
    for source in corpus.load_sources():
        assert corpus._gradient_max(source) <= corpus.GRADIENT_BOUND


def test_patches_spacelike(corpus_patches):
    u, v = Grid(7, 7, corpus.DOMAIN).points()
    for patch in corpus_patches:
        fj = frame_jets(patch, u, v)
        assert np.all(fj.Theta_value <= -1.0)


def test_corpus_passes_suite(corpus_patches):
    grid = Grid(5, 5, corpus.DOMAIN)
    for patch in corpus_patches:
        rep = suite.run_suite(DeformationContext.free_c(patch, 1.0), grid)
        assert rep.passed, (patch.label, [r.id for r in rep.identities if not r.passed])
