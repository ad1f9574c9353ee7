"""Text drift detection against a training corpus.

Embeds documents (trained skip-gram vectors, vector files, or a remote
provider), models the training embedding distribution (GMM, VAE, or a
cosine-to-centroid baseline), and flags payload documents whose
similarity score falls below a threshold. Explains drift per sample via
word masking and per dataset via syntactic statistics.
"""

from .corpus import AnnotatedSentence, AnnotatedToken, CleanDocument, Document, clean, load_annotated_corpus, load_corpus
from .detector import (
    DriftVerdict,
    PipelineConfig,
    TrainedPipeline,
    load_pipeline,
    save_pipeline,
    score_payload,
    train_pipeline,
)
from .embeddings import Backend, BackendDescriptor, WordVectorTable, embed_batch, embed_document, load_vector_file, train_skipgram
from .evaluation import run_benchmark, scaled_accuracy, stratified_split
from .explain import SampleExplanation, explain_sample, render_highlights

__version__ = "0.1.0"
