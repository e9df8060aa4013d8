static int setup_ring(struct ring *r, int n)
{
	r->slots = kmalloc(n * sizeof(*r->slots), GFP_KERNEL);
	if (!r->slots)
		return -ENOMEM;
	r->size = n;
	r->head = 0;
	return 0;
}
