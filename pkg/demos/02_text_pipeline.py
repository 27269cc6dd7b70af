"""Tokenizing, TF-IDF indexing, scoring, and query expansion.

Run: python3 demos/02_text_pipeline.py
"""

from interfuse import ingest, textsim

CORPUS = [
    ("d1", "Sunset over the sandy beach, palm trees swaying."),
    ("d2", "Mountain bikes racing downhill over rocky trails."),
    ("d3", "Beach volleyball players jumping in the warm sand."),
    ("d4", "Snowy mountain peaks under a clear evening sky."),
    ("d5", "Fishing boats returning to the harbor at sunset."),
]


def main():
    stopwords = textsim.default_stopwords()
    docs = [ingest.DocumentRecord(doc_id, text) for doc_id, text in CORPUS]

    print("Tokenization lowercases, drops stopwords, then stems:")
    for doc in docs[:2]:
        print(f"  {doc.doc_id}: {textsim.tokenize(doc.text, stopwords)}")

    vocab, doc_vecs = textsim.build_index(docs, stopwords)
    print(f"\nIndex over {vocab.n_docs} documents, "
          f"{len(vocab.index)} distinct terms")

    idf = vocab.idf()
    print("Rarer terms carry higher idf = ln((1+N)/(1+df)) + 1:")
    for term in ("beach", "sunset", "volleybal"):
        value = idf[vocab.index[term]]
        print(f"  idf({term}) = {value:.4f}")

    print("\nCosine scores for the query 'sunset beach':")
    qvec = textsim.vectorize(textsim.tokenize("sunset beach", stopwords),
                             vocab)
    for doc_id in sorted(doc_vecs):
        score = textsim.text_score(qvec, doc_vecs[doc_id])
        print(f"  {doc_id}: {score:.4f}")

    print("\nExpansion appends frequent stems from known-relevant docs:")
    query = ingest.QueryRecord("q1", "seaside holiday")
    relevant = [docs[0], docs[2]]  # the two beach documents
    expanded = textsim.expand_query(query, relevant, k=3,
                                    stopwords=stopwords)
    print(f"  before: {query.text!r}")
    print(f"  after:  {expanded.text!r}")


if __name__ == "__main__":
    main()
