"""x-vector speaker embeddings trained with margin softmax losses, scored with PLDA."""

__all__: list[str] = []
