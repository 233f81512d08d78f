"""pixgen: code-guided synthetic text-rich image dataset generation.

The package turns a short text query into a dataset of rendered images with
question-answer and pointing annotations. An LLM is driven through a staged
pipeline (topic, data, code, instruction), the generated code is executed in
a sandboxed renderer to produce the image, and results are packed into a
JSONL shard with full provenance.
"""

__version__ = "0.1.0"
