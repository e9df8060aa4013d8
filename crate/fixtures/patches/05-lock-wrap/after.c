static void bump_counter(struct dev *d, int delta)
{
	spin_lock(&d->lock);
	d->count += delta;
	d->events++;
	spin_unlock(&d->lock);
	notify(d);
}
