import pytest
from hypothesis import given, settings, strategies as st

from cotsynth.corpus import (
    InterviewTranscript,
    Speaker,
    Split,
    Turn,
    corpus_stats,
    load_corpus,
    load_labels,
    load_splits,
    parse_transcript,
    participant_text,
    score_distribution,
    serialize_transcript,
    transcript_from_dict,
    transcript_to_dict,
)
from cotsynth.errors import (
    DuplicateSession,
    EmptyCorpus,
    EmptyTranscript,
    MalformedRow,
    ScoreOutOfRange,
    UnknownSpeaker,
)
from cotsynth.fixtures import five_session_sessions, write_corpus

HEADER = "start_time\tstop_time\tspeaker\tvalue\n"


def tx(sid, words, score=None, split=None):
    turns = [Turn(float(i), float(i) + 0.5, Speaker.PARTICIPANT, w) for i, w in enumerate(words)]
    return InterviewTranscript(sid, tuple(turns), score, split)


def test_parse_two_rows():
    t = parse_transcript(HEADER + "1.0\t2.0\tEllie\thi\n2.5\t3.0\tParticipant\thello there\n", "s1")
    assert len(t.turns) == 2
    assert t.turns[0].speaker is Speaker.INTERVIEWER
    assert t.phq8 is None and t.split is None


def test_three_columns_names_line():
    with pytest.raises(MalformedRow) as err:
        parse_transcript(HEADER + "1\t2\tParticipant\tok\n3\t4\tEllie\n", "s1")
    assert err.value.line == 3
    assert "3" in str(err.value)


def test_non_numeric_time():
    with pytest.raises(MalformedRow):
        parse_transcript(HEADER + "x\t2\tParticipant\tok\n", "s1")


def test_unknown_speaker():
    with pytest.raises(UnknownSpeaker):
        parse_transcript(HEADER + "1\t2\tBob\tok\n", "s1")


def test_interviewer_only_is_empty():
    with pytest.raises(EmptyTranscript):
        parse_transcript(HEADER + "1\t2\tEllie\thi\n3\t4\tEllie\tanyone\n", "s1")


def test_empty_file():
    with pytest.raises(EmptyTranscript):
        parse_transcript("", "s1")


def test_labels():
    assert load_labels("session_id,phq8_score\ns1,0\n") == {"s1": 0}
    with pytest.raises(ScoreOutOfRange):
        load_labels("session_id,phq8_score\ns1,25\n")
    with pytest.raises(DuplicateSession):
        load_labels("session_id,phq8_score\ns1,10\ns1,12\n")
    with pytest.raises(MalformedRow):
        load_labels("session_id,phq8_score\ns1,ten\n")


def test_splits():
    assert load_splits("session_id,split\ns1,dev\n") == {"s1": Split.DEV}
    with pytest.raises(MalformedRow):
        load_splits("session_id,split\ns1,holdout\n")


def test_participant_text():
    t = InterviewTranscript("s", (
        Turn(0, 1, Speaker.INTERVIEWER, "hi"),
        Turn(1, 2, Speaker.PARTICIPANT, "a"),
        Turn(2, 3, Speaker.PARTICIPANT, "b"),
    ))
    assert participant_text(t) == "a b"
    assert participant_text(tx("x", ["x"])) == "x"


def test_score_distribution_fixture():
    corpus = [tx(f"s{i}", ["w"], s, Split.TRAIN) for i, s in enumerate([2, 9, 10, 15, 24])]
    dist = score_distribution(corpus)
    assert dist.depressed_count == 3
    assert dist.total == 5
    assert sum(dist.total_bins) == 5


def test_score_distribution_empty():
    dist = score_distribution([])
    assert dist.total == 0 and dist.depressed_count == 0
    assert all(c == 0 for c in dist.total_bins)


def test_corpus_stats():
    assert corpus_stats([tx("a", ["a b c"])]) == {"avg_words": 3.0, "max_words": 3}
    assert corpus_stats([tx("a", ["a b"]), tx("b", ["a b c d"])]) == {"avg_words": 3.0, "max_words": 4}
    with pytest.raises(EmptyCorpus):
        corpus_stats([])


def test_load_fixture_corpus(tmp_path):
    paths = write_corpus(tmp_path, five_session_sessions())
    corpus = load_corpus(paths["corpus_dir"], paths["labels"], paths["splits"])
    assert [t.session_id for t in corpus] == ["s1", "s2", "s3", "s4", "s5"]
    assert [t.phq8 for t in corpus] == [2, 9, 10, 15, 24]


def test_dict_round_trip(tmp_path):
    paths = write_corpus(tmp_path, five_session_sessions())
    for t in load_corpus(paths["corpus_dir"], paths["labels"], paths["splits"]):
        assert transcript_from_dict(transcript_to_dict(t)) == t


text_st = st.text(st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp")), min_size=1, max_size=30) \
    .map(str.strip).filter(bool)


@st.composite
def transcripts(draw):
    n = draw(st.integers(1, 8))
    starts = sorted(draw(st.lists(st.floats(0, 1e5, allow_nan=False), min_size=n, max_size=n)))
    turns = []
    for i, s in enumerate(starts):
        who = Speaker.PARTICIPANT if i == 0 else draw(st.sampled_from(list(Speaker)))
        turns.append(Turn(s, s + draw(st.floats(0, 100)), who, draw(text_st)))
    return InterviewTranscript("sid", tuple(turns))


@settings(max_examples=150, deadline=None)
@given(transcripts())
def test_serialize_round_trip(t):
    assert parse_transcript(serialize_transcript(t), "sid") == t


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 24), max_size=60))
def test_distribution_total_matches_length(scores):
    corpus = [tx(f"s{i}", ["w"], s, Split.TRAIN) for i, s in enumerate(scores)]
    dist = score_distribution(corpus)
    assert dist.total == len(scores) == sum(dist.total_bins)
    extra = score_distribution(corpus + [tx("new", ["w"], 12, Split.TRAIN)])
    assert extra.depressed_count == dist.depressed_count + 1
