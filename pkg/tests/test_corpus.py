import json

import pytest
from hypothesis import given, settings, strategies as st

from polyrepair import _snippets
from polyrepair.corpus import (LANGUAGES, MUTATIONS, BugFixPair, TaskDataset, TaskStream,
                               build_stream, generate_synthetic_corpus, load_corpus,
                               mutate_line, parse_stream, read_pairs, save_corpus, split_of,
                               truncate_tokens)
from polyrepair.errors import ConfigurationError, ParseError, ValidationError


@pytest.mark.parametrize("lang", LANGUAGES)
def test_bank_has_enough_snippets(lang):
    assert len(_snippets.BANK[lang]) >= 20


def test_generation_is_deterministic():
    a = generate_synthetic_corpus("python", seed=7, n=3)
    b = generate_synthetic_corpus("python", seed=7, n=3)
    assert a == b
    dump = lambda ds: [json.dumps(p.to_record()) for p in ds.pairs()]
    assert dump(a) == dump(b)


def test_different_seeds_differ():
    a = generate_synthetic_corpus("java", seed=1, n=50).pairs()
    b = generate_synthetic_corpus("java", seed=2, n=50).pairs()
    assert [p.buggy for p in a] != [p.buggy for p in b]


@pytest.mark.parametrize("lang", LANGUAGES)
def test_generated_pairs_are_valid(lang):
    ds = generate_synthetic_corpus(lang, seed=0, n=300)
    pairs = ds.pairs()
    assert len(pairs) == 300
    assert all(p.buggy != p.fixed and p.lang == lang for p in pairs)
    # the mutant sits inside its context, the original line does not need to
    assert all(p.buggy in p.context for p in pairs)
    ids = [[p.id for p in split] for split in (ds.train, ds.val, ds.test)]
    assert sum(map(len, ids)) == 300
    assert not (set(ids[0]) & set(ids[1]) or set(ids[0]) & set(ids[2]) or set(ids[1]) & set(ids[2]))


def test_split_ratios_roughly_hold():
    ds = generate_synthetic_corpus("c", seed=0, n=2000)
    assert 1500 < len(ds.train) < 1700
    assert 150 < len(ds.val) < 250 and 150 < len(ds.test) < 250


def test_while_queue_template_yields_while_true():
    outs = {m for op in MUTATIONS for m in mutate_line("    while queue:", "python", op)}
    assert "    while True:" in outs
    ds = generate_synthetic_corpus("python", seed=0, n=2000)
    assert any(p.fixed == "while queue:" and p.buggy == "while True:" for p in ds.pairs())


@pytest.mark.parametrize("op", sorted(MUTATIONS))
def test_each_operator_changes_the_line(op):
    hits = 0
    for lang in LANGUAGES:
        for snippet in _snippets.BANK[lang]:
            for line in snippet.split("\n"):
                for m in mutate_line(line, lang, op):
                    assert m != line
                    hits += 1
    assert hits > 0


def test_unsupported_language():
    with pytest.raises(ConfigurationError):
        generate_synthetic_corpus("cobol", seed=0, n=3)
    with pytest.raises(ConfigurationError):
        generate_synthetic_corpus("c", seed=0, n=0)


def test_split_of_is_stable():
    assert split_of("abc") == split_of("abc")
    assert {split_of(f"x{i}") for i in range(200)} == {"train", "val", "test"}


def test_load_empty_file(tmp_path):
    f = tmp_path / "e.jsonl"
    f.write_text("")
    ds = load_corpus(f)
    assert len(ds) == 0


def test_missing_field_names_line(tmp_path):
    f = tmp_path / "bad.jsonl"
    good = {"id": "a", "lang": "c", "buggy": "x", "context": "", "fixed": "y"}
    bad = {k: v for k, v in good.items() if k != "fixed"} | {"id": "b"}
    f.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
    with pytest.raises(ParseError, match="line 2") as info:
        load_corpus(f)
    assert info.value.line == 2 and "fixed" in str(info.value)


def test_malformed_json_line(tmp_path):
    f = tmp_path / "bad.jsonl"
    f.write_text("{not json\n")
    with pytest.raises(ParseError, match="line 1"):
        read_pairs(f)


def test_validation_lists_offending_ids(tmp_path):
    f = tmp_path / "v.jsonl"
    rows = [{"id": "ok", "lang": "c", "buggy": "a", "context": "", "fixed": "b"},
            {"id": "same", "lang": "c", "buggy": "a", "context": "", "fixed": "a"},
            {"id": "ok", "lang": "c", "buggy": "q", "context": "", "fixed": "r"}]
    f.write_text("".join(json.dumps(r) + "\n" for r in rows))
    with pytest.raises(ValidationError) as info:
        load_corpus(f)
    assert info.value.ids == ["ok"]
    f.write_text("".join(json.dumps(r) + "\n" for r in rows[:2]))
    with pytest.raises(ValidationError) as info:
        load_corpus(f)
    assert info.value.ids == ["same"]


def test_mixed_languages_rejected():
    pairs = [BugFixPair("a", "c", "x", "", "y"), BugFixPair("b", "java", "x", "", "y")]
    with pytest.raises(ValidationError):
        TaskDataset.from_pairs(pairs)


_text = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=0x2fff), max_size=30)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(_text, _text, _text), min_size=1, max_size=100))
def test_save_load_round_trip(tmp_path_factory, rows):
    pairs = [BugFixPair(f"id{i}", "python", b, c, f + "!" if f == b else f)
             for i, (b, c, f) in enumerate(rows)]
    path = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_corpus(pairs, path)
    assert read_pairs(path) == pairs
    ds = load_corpus(path)
    assert sorted(ds.pairs(), key=lambda p: p.id) == sorted(pairs, key=lambda p: p.id)
    save_corpus(ds, path)
    records = [json.loads(l) for l in path.read_text(encoding="utf-8").split("\n") if l]
    assert records == [p.to_record() for p in pairs]


def test_truncate_examples():
    assert truncate_tokens(list(range(10))) == list(range(10))
    assert truncate_tokens(list(range(600))) == list(range(512))
    with pytest.raises(ConfigurationError):
        truncate_tokens([1], 0)


@given(st.lists(st.integers(0, 50), max_size=40), st.integers(1, 50))
def test_truncate_idempotent_and_monotone(ids, n):
    once = truncate_tokens(ids, n)
    assert truncate_tokens(once, n) == once
    assert len(once) <= len(ids) and once == ids[:len(once)]


def test_stream_config(tmp_path):
    corpus = generate_synthetic_corpus("java", seed=1, n=20)
    save_corpus(corpus, tmp_path / "java.jsonl")
    tasks = parse_stream([{"lang": "python", "n": 30, "seed": 2},
                          {"lang": "java", "corpus": "java.jsonl"}], base_dir=tmp_path)
    stream = build_stream(tasks)
    assert [t.task_id for t in stream] == [1, 2]
    assert [t.lang for t in stream] == ["python", "java"]
    assert len(stream.tasks[0]) == 30
    assert sorted(p.id for p in stream.tasks[1].pairs()) == sorted(p.id for p in corpus.pairs())


@pytest.mark.parametrize("bad", [
    [],
    [{"lang": "cobol", "n": 3}],
    [{"lang": "c"}],
    [{"lang": "c", "corpus": "missing.jsonl"}],
    [{"lang": "c", "n": 3, "task_id": 2}],
])
def test_stream_config_errors(tmp_path, bad):
    with pytest.raises(ConfigurationError):
        parse_stream(bad, base_dir=tmp_path)


def test_stream_ids_must_increase():
    t1 = generate_synthetic_corpus("c", 0, 5, task_id=1)
    t3 = generate_synthetic_corpus("c", 0, 5, task_id=3)
    with pytest.raises(ConfigurationError):
        TaskStream((t1, t3))
