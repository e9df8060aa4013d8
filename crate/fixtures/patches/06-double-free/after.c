static void release_buf(struct ctx *c)
{
	kfree(c->buf);
	c->len = 0;
	c->buf = NULL;
}
